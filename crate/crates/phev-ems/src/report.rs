//! Side-by-side controller comparison artifacts.

use phev_core::env::Totals;

/// One controller's aggregates plus its cost gap to the benchmark.
#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub name: String,
    pub totals: Totals,
    /// (cost − cost_benchmark) / cost_benchmark, percent; zero for the
    /// benchmark itself.
    pub gap_pct: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ComparisonReport {
    pub entries: Vec<ReportEntry>,
}

impl ComparisonReport {
    /// Build from rollout totals; the first entry is the benchmark the gaps
    /// are measured against.
    pub fn new(named: Vec<(String, Totals)>) -> ComparisonReport {
        let base = named[0].1.cost_cny;
        let entries = named
            .into_iter()
            .map(|(name, totals)| ReportEntry {
                gap_pct: 100.0 * (totals.cost_cny - base) / base,
                name,
                totals,
            })
            .collect();
        ComparisonReport { entries }
    }

    /// Full-precision CSV; numbers re-derivable from the emitted traces.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "controller,cost_cny,fuel_l,elec_kwh,engagement_pct,soc_final,gap_pct\n",
        );
        for e in &self.entries {
            let t = &e.totals;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.name, t.cost_cny, t.fuel_liters, t.elec_kwh, t.engagement_pct, t.soc_final, e.gap_pct
            ));
        }
        out
    }

    /// Human-readable table for stdout.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>10} {:>9} {:>10} {:>9} {:>9} {:>8}\n",
            "controller", "cost CNY", "fuel L", "elec kWh", "engage %", "soc end", "gap %"
        ));
        for e in &self.entries {
            let t = &e.totals;
            out.push_str(&format!(
                "{:<10} {:>10.4} {:>9.4} {:>10.4} {:>9.2} {:>9.4} {:>8.2}\n",
                e.name, t.cost_cny, t.fuel_liters, t.elec_kwh, t.engagement_pct, t.soc_final, e.gap_pct
            ));
        }
        out
    }
}
