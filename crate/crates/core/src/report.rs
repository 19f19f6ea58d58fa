//! Script statistics, side-by-side comparison and distribution export.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::corpus::FitnessWeights;
use crate::corpus::{
    unit_histogram, DistributionVector, Script, SentenceId, SentencePool, UnitInventory,
};
use crate::error::{Error, Result};
use crate::fitness::fitness;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptStats {
    pub sets: usize,
    pub set_size: usize,
    pub inventory_size: usize,
    pub base_inventory_size: usize,
    /// Distinct tone-stripped labels present in the script.
    pub base_syllable_coverage: usize,
    /// Distinct units present in the script.
    pub tonal_syllable_coverage: usize,
    pub script_distribution: f64,
    pub set_distribution_mean: f64,
    /// Population standard deviation of the per-set cosines.
    pub set_distribution_std: f64,
    pub per_set_distribution: Vec<f64>,
    #[serde(skip)]
    pub histogram: DistributionVector,
}

pub fn script_stats(
    script: &Script,
    pool: &SentencePool,
    d_real: &DistributionVector,
) -> Result<ScriptStats> {
    script.validate(pool)?;
    let ids: Vec<SentenceId> = script.ids().collect();
    let histogram = unit_histogram(&ids, pool)?;
    let (base_of, base_count) = pool.inventory().base_mapping();
    let bases: HashSet<usize> = histogram
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0.0)
        .map(|(u, _)| base_of[u])
        .collect();
    let b = fitness(script, pool, d_real, FitnessWeights::default())?;
    let n = b.per_set_distribution.len();
    let std = if n == 0 {
        0.0
    } else {
        let var = b
            .per_set_distribution
            .iter()
            .map(|x| (x - b.set_distribution_mean).powi(2))
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    };
    let (sets, set_size) = script.shape();
    Ok(ScriptStats {
        sets,
        set_size,
        inventory_size: pool.inventory().len(),
        base_inventory_size: base_count,
        base_syllable_coverage: bases.len(),
        tonal_syllable_coverage: histogram.support(),
        script_distribution: b.script_distribution,
        set_distribution_mean: b.set_distribution_mean,
        set_distribution_std: std,
        per_set_distribution: b.per_set_distribution,
        histogram,
    })
}

impl fmt::Display for ScriptStats {
    /// `key: value` record, one field per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "shape: {}x{}", self.sets, self.set_size)?;
        writeln!(f, "inventory_size: {}", self.inventory_size)?;
        writeln!(f, "base_inventory_size: {}", self.base_inventory_size)?;
        writeln!(
            f,
            "tonal_syllable_coverage: {}",
            self.tonal_syllable_coverage
        )?;
        writeln!(f, "base_syllable_coverage: {}", self.base_syllable_coverage)?;
        writeln!(f, "script_distribution: {:.6}", self.script_distribution)?;
        writeln!(
            f,
            "set_distribution_mean: {:.6}",
            self.set_distribution_mean
        )?;
        writeln!(f, "set_distribution_std: {:.6}", self.set_distribution_std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparedField {
    pub field: &'static str,
    pub a: f64,
    pub b: f64,
    /// `a - b`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptComparison {
    pub fields: Vec<ComparedField>,
}

impl ScriptComparison {
    pub fn get(&self, field: &str) -> Option<&ComparedField> {
        self.fields.iter().find(|f| f.field == field)
    }
}

impl fmt::Display for ScriptComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<26} {:>12} {:>12} {:>12}", "field", "a", "b", "delta")?;
        for c in &self.fields {
            // counts print as integers, similarities with six decimals
            let p = if [c.a, c.b].iter().all(|v| v.fract() == 0.0) {
                0
            } else {
                6
            };
            writeln!(
                f,
                "{:<26} {:>12.p$} {:>12.p$} {:>+12.p$}",
                c.field, c.a, c.b, c.delta
            )?;
        }
        Ok(())
    }
}

pub fn compare_scripts(a: &ScriptStats, b: &ScriptStats) -> Result<ScriptComparison> {
    if a.inventory_size != b.inventory_size || a.histogram.len() != b.histogram.len() {
        return Err(Error::InventoryMismatch);
    }
    let pairs: [(&'static str, f64, f64); 5] = [
        (
            "tonal_syllable_coverage",
            a.tonal_syllable_coverage as f64,
            b.tonal_syllable_coverage as f64,
        ),
        (
            "base_syllable_coverage",
            a.base_syllable_coverage as f64,
            b.base_syllable_coverage as f64,
        ),
        (
            "script_distribution",
            a.script_distribution,
            b.script_distribution,
        ),
        (
            "set_distribution_mean",
            a.set_distribution_mean,
            b.set_distribution_mean,
        ),
        (
            "set_distribution_std",
            a.set_distribution_std,
            b.set_distribution_std,
        ),
    ];
    Ok(ScriptComparison {
        fields: pairs
            .into_iter()
            .map(|(field, a, b)| ComparedField {
                field,
                a,
                b,
                delta: a - b,
            })
            .collect(),
    })
}

/// A row of the exported distribution table.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub unit: String,
    pub script_count: f64,
    pub real_count: f64,
}

/// CSV with columns `unit,script_count,real_count`, rows sorted by
/// descending real count (ties by inventory order).
pub fn distribution_table(
    inventory: &UnitInventory,
    script_hist: &DistributionVector,
    d_real: &DistributionVector,
) -> Result<String> {
    let s = inventory.len();
    for v in [script_hist, d_real] {
        if v.len() != s {
            return Err(Error::Dimension {
                left: v.len(),
                right: s,
            });
        }
    }
    let real = d_real.counts();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&x, &y| real[y].total_cmp(&real[x]));
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(e.to_string());
    w.write_record(["unit", "script_count", "real_count"])
        .map_err(csv_err)?;
    for u in order {
        w.write_record([
            inventory.label(u).to_owned(),
            script_hist.counts()[u].to_string(),
            real[u].to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("labels are utf-8"))
}

pub fn export_distribution(
    inventory: &UnitInventory,
    script_hist: &DistributionVector,
    d_real: &DistributionVector,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let table = distribution_table(inventory, script_hist, d_real)?;
    fs::write(path, table).map_err(|e| Error::io(path, e))
}

pub fn read_distribution_table(path: impl AsRef<Path>) -> Result<Vec<DistributionRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(path, format!("bad number in row {rec:?}")))
        };
        rows.push(DistributionRow {
            unit: rec.get(0).unwrap_or_default().to_owned(),
            script_count: num(1)?,
            real_count: num(2)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotations, Sentence};
    use crate::fitness::script_syllable_coverage;

    fn pool(labels: &[&str], units: &[Vec<usize>]) -> SentencePool {
        let inv = UnitInventory::from_labels(labels.iter().copied()).unwrap();
        let sentences = units
            .iter()
            .enumerate()
            .map(|(i, u)| Sentence {
                id: SentenceId(i as u32),
                text: String::new(),
                units: u.clone(),
                annotations: Annotations::default(),
            })
            .collect();
        SentencePool::new(inv, sentences).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<SentenceId> {
        v.iter().map(|&i| SentenceId(i)).collect()
    }

    #[test]
    fn base_and_tonal_coverage() {
        let p = pool(&["ma1", "ma3", "de5"], &[vec![0], vec![1], vec![2]]);
        let real = DistributionVector::from_counts(vec![1.0, 1.0, 1.0]).unwrap();
        let s = Script::new(vec![ids(&[0, 1])]).unwrap();
        let st = script_stats(&s, &p, &real).unwrap();
        assert_eq!(st.tonal_syllable_coverage, 2);
        assert_eq!(st.base_syllable_coverage, 1);
        assert_eq!(st.base_inventory_size, 2);
        assert_eq!(st.set_distribution_std, 0.0);
    }

    #[test]
    fn stats_match_independent_recomputation() {
        let p = pool(
            &["a1", "a2", "b1", "c4"],
            &[
                vec![0, 1],
                vec![1, 1],
                vec![2],
                vec![3, 0],
                vec![2, 2, 3],
                vec![0],
            ],
        );
        let real = DistributionVector::from_counts(vec![5.0, 3.0, 2.0, 1.0]).unwrap();
        let s = Script::new(vec![ids(&[0, 1]), ids(&[2, 3]), ids(&[4, 5])]).unwrap();
        let st = script_stats(&s, &p, &real).unwrap();
        let cos = |h: &[f64]| {
            let r = real.counts();
            let dot: f64 = h.iter().zip(r).map(|(a, b)| a * b).sum();
            dot / (h.iter().map(|x| x * x).sum::<f64>().sqrt()
                * r.iter().map(|x| x * x).sum::<f64>().sqrt())
        };
        let sets = [
            vec![1.0, 3.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 1.0],
        ];
        let per: Vec<f64> = sets.iter().map(|h| cos(h)).collect();
        let mean = per.iter().sum::<f64>() / 3.0;
        let std = (per.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!((st.script_distribution - cos(&[3.0, 3.0, 3.0, 2.0])).abs() < 1e-12);
        assert!((st.set_distribution_mean - mean).abs() < 1e-12);
        assert!((st.set_distribution_std - std).abs() < 1e-12);
        assert_eq!(st.histogram.counts(), &[3.0, 3.0, 3.0, 2.0]);
        let cov = script_syllable_coverage(&s, &p, 4).unwrap();
        assert_eq!(cov * 4.0, st.tonal_syllable_coverage as f64);
    }

    #[test]
    fn comparison_deltas() {
        let p = pool(
            &["a1", "b1", "c1"],
            &[vec![0], vec![1], vec![2], vec![0, 1]],
        );
        let real = DistributionVector::from_counts(vec![3.0, 2.0, 1.0]).unwrap();
        let a = script_stats(&Script::new(vec![ids(&[0, 1])]).unwrap(), &p, &real).unwrap();
        let b = script_stats(&Script::new(vec![ids(&[2, 3])]).unwrap(), &p, &real).unwrap();
        let same = compare_scripts(&a, &a).unwrap();
        assert!(same.fields.iter().all(|f| f.delta == 0.0));
        let d = compare_scripts(&a, &b).unwrap();
        for f in &d.fields {
            assert_eq!(f.delta, f.a - f.b);
        }
        assert_eq!(d.get("tonal_syllable_coverage").unwrap().delta, -1.0);

        let mut bigger = a.clone();
        bigger.tonal_syllable_coverage = 1120;
        let mut smaller = a.clone();
        smaller.tonal_syllable_coverage = 668;
        let d = compare_scripts(&bigger, &smaller).unwrap();
        assert_eq!(d.get("tonal_syllable_coverage").unwrap().delta, 452.0);
        assert!(d.to_string().contains("+452"));

        let other = pool(&["a1"], &[vec![0]]);
        let r1 = DistributionVector::from_counts(vec![1.0]).unwrap();
        let c = script_stats(&Script::new(vec![ids(&[0])]).unwrap(), &other, &r1).unwrap();
        assert!(matches!(
            compare_scripts(&a, &c),
            Err(Error::InventoryMismatch)
        ));
    }

    #[test]
    fn export_round_trip_and_ordering() {
        let p = pool(&["a1", "b1", "c1"], &[vec![0, 2], vec![1]]);
        let real = DistributionVector::from_counts(vec![1.0, 7.0, 3.5]).unwrap();
        let empty = Script::new(vec![]).unwrap();
        let hist = unit_histogram(&empty.ids().collect::<Vec<_>>(), &p).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        export_distribution(p.inventory(), &hist, &real, f.path()).unwrap();
        let rows = read_distribution_table(f.path()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows.iter().map(|r| r.unit.as_str()).collect::<Vec<_>>(),
            ["b1", "c1", "a1"]
        );
        assert!(rows.iter().all(|r| r.script_count == 0.0));
        assert_eq!(rows[1].real_count, 3.5);

        let hist = unit_histogram(&ids(&[0, 1]), &p).unwrap();
        export_distribution(p.inventory(), &hist, &real, f.path()).unwrap();
        let back = read_distribution_table(f.path()).unwrap();
        for r in back {
            let u = p.inventory().get(&r.unit).unwrap();
            assert_eq!(r.script_count, hist.counts()[u]);
            assert_eq!(r.real_count, real.counts()[u]);
        }
        let t1 = distribution_table(p.inventory(), &hist, &real).unwrap();
        let t2 = distribution_table(p.inventory(), &hist, &real).unwrap();
        assert_eq!(t1, t2);
    }
}
