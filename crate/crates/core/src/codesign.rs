//! Joint grid search over FABNet hyperparameters and accelerator parallelism.

use serde::{Deserialize, Serialize};

use crate::butterfly::Precision;
use crate::error::{Error, Result};
use crate::fabnet::{FabNetConfig, PadPolicy};
use crate::par;
use crate::sim::{resource_model, sim_network, DeviceBudget, HardwareConfig, ResourceReport};

fn default_p_head() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub d_hid: Vec<usize>,
    pub r_ffn: Vec<usize>,
    pub n_total: Vec<usize>,
    pub n_abfly: Vec<usize>,
    pub p_be: Vec<usize>,
    pub p_bu: Vec<usize>,
    pub p_qk: Vec<usize>,
    pub p_sv: Vec<usize>,
    pub n_heads: usize,
    pub seq_len: usize,
    /// Attention engines instantiated whenever `p_qk` and `p_sv` are non-zero.
    #[serde(default = "default_p_head")]
    pub p_head: usize,
    /// Remaining hardware constants; its parallelism fields are ignored.
    #[serde(default)]
    pub hardware: Option<HardwareConfig>,
}

impl SearchSpace {
    /// The LRA-Text instance: 5 * 3 * 2 * 2 * 7^4 = 144,060 points.
    pub fn lra_text() -> Self {
        let par = vec![0, 4, 8, 16, 32, 64, 128];
        SearchSpace {
            d_hid: vec![64, 128, 256, 512, 1024],
            r_ffn: vec![1, 2, 4],
            n_total: vec![1, 2],
            n_abfly: vec![0, 1],
            p_be: par.clone(),
            p_bu: par.clone(),
            p_qk: par.clone(),
            p_sv: par,
            n_heads: 2,
            seq_len: 1024,
            p_head: 1,
            hardware: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let space: SearchSpace = serde_json::from_str(s)?;
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("d_hid", &self.d_hid),
            ("r_ffn", &self.r_ffn),
            ("n_total", &self.n_total),
            ("n_abfly", &self.n_abfly),
            ("p_be", &self.p_be),
            ("p_bu", &self.p_bu),
            ("p_qk", &self.p_qk),
            ("p_sv", &self.p_sv),
        ] {
            if axis.is_empty() {
                return Err(Error::Config(format!("search axis {name} is empty")));
            }
        }
        if self.n_heads == 0 || self.seq_len == 0 {
            return Err(Error::Config("n_heads and seq_len must be positive".into()));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        [
            &self.d_hid,
            &self.r_ffn,
            &self.n_total,
            &self.n_abfly,
            &self.p_be,
            &self.p_bu,
            &self.p_qk,
            &self.p_sv,
        ]
        .iter()
        .map(|a| a.len())
        .product()
    }
}

/// One grid point, before evaluation. Field order is the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub d_hid: usize,
    pub r_ffn: usize,
    pub n_total: usize,
    pub n_abfly: usize,
    pub p_be: usize,
    pub p_bu: usize,
    pub p_qk: usize,
    pub p_sv: usize,
}

impl GridPoint {
    pub fn key(&self) -> String {
        format!(
            "d{:04}-r{}-t{}-a{}-be{:03}-bu{:03}-qk{:03}-sv{:03}",
            self.d_hid, self.r_ffn, self.n_total, self.n_abfly, self.p_be, self.p_bu, self.p_qk, self.p_sv
        )
    }

    pub fn model(&self, space: &SearchSpace) -> FabNetConfig {
        FabNetConfig {
            d_hid: self.d_hid,
            r_ffn: self.r_ffn,
            n_total: self.n_total,
            n_abfly: self.n_abfly,
            n_heads: space.n_heads,
            seq_len: space.seq_len,
            pad_policy: PadPolicy::ZeroPad,
        }
    }

    pub fn hardware(&self, space: &SearchSpace) -> HardwareConfig {
        let template = space.hardware.unwrap_or_default();
        let p_head = if self.p_qk > 0 && self.p_sv > 0 {
            space.p_head
        } else {
            0
        };
        HardwareConfig {
            p_be: self.p_be,
            p_bu: self.p_bu,
            ..template
        }
        .with_attention(p_head, self.p_qk, self.p_sv)
    }
}

/// Full Cartesian product in lexicographic axis order.
pub fn enumerate(space: &SearchSpace) -> Result<Vec<GridPoint>> {
    space.validate()?;
    let mut out = Vec::with_capacity(space.size());
    for &d_hid in &space.d_hid {
        for &r_ffn in &space.r_ffn {
            for &n_total in &space.n_total {
                for &n_abfly in &space.n_abfly {
                    for &p_be in &space.p_be {
                        for &p_bu in &space.p_bu {
                            for &p_qk in &space.p_qk {
                                for &p_sv in &space.p_sv {
                                    out.push(GridPoint {
                                        d_hid,
                                        r_ffn,
                                        n_total,
                                        n_abfly,
                                        p_be,
                                        p_bu,
                                        p_qk,
                                        p_sv,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Optional field constraints; an absent field matches anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigMatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_hid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ffn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_abfly: Option<usize>,
}

impl ConfigMatch {
    fn matches(&self, cfg: &FabNetConfig) -> bool {
        self.d_hid.is_none_or(|v| v == cfg.d_hid)
            && self.r_ffn.is_none_or(|v| v == cfg.r_ffn)
            && self.n_total.is_none_or(|v| v == cfg.n_total)
            && self.n_abfly.is_none_or(|v| v == cfg.n_abfly)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyEntry {
    #[serde(rename = "match", default)]
    pub matcher: ConfigMatch,
    pub accuracy: std::collections::BTreeMap<String, f64>,
}

/// Per-dataset accuracies keyed by model configuration; the first matching
/// entry that lists the dataset wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyTable {
    pub baseline: std::collections::BTreeMap<String, f64>,
    pub entries: Vec<AccuracyEntry>,
}

impl AccuracyTable {
    pub fn from_json(s: &str) -> Result<Self> {
        let t: AccuracyTable = serde_json::from_str(s)?;
        for v in t
            .baseline
            .values()
            .chain(t.entries.iter().flat_map(|e| e.accuracy.values()))
        {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Config(format!("accuracy {v} outside [0, 1]")));
            }
        }
        Ok(t)
    }

    pub fn baseline(&self, dataset: &str) -> Result<f64> {
        self.baseline
            .get(dataset)
            .copied()
            .ok_or_else(|| Error::MissingAccuracy {
                dataset: dataset.to_string(),
                key: "baseline".into(),
            })
    }

    pub fn lookup(&self, dataset: &str, cfg: &FabNetConfig) -> Result<f64> {
        self.entries
            .iter()
            .filter(|e| e.matcher.matches(cfg))
            .find_map(|e| e.accuracy.get(dataset).copied())
            .ok_or_else(|| Error::MissingAccuracy {
                dataset: dataset.to_string(),
                key: format!(
                    "d{}-r{}-t{}-a{}",
                    cfg.d_hid, cfg.r_ffn, cfg.n_total, cfg.n_abfly
                ),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasible {
    /// The parallelism tuple is not a buildable accelerator for this model.
    Hardware,
    Resources,
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignPoint {
    pub key: String,
    pub grid: GridPoint,
    pub accuracy: f64,
    pub accuracy_loss: f64,
    pub latency_s: Option<f64>,
    pub resources: Option<ResourceReport>,
    pub feasible: bool,
    pub reason: Option<Infeasible>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    pub dataset: String,
    /// Largest allowed `baseline - accuracy`, as a fraction.
    pub max_accuracy_loss: f64,
    pub budget: DeviceBudget,
}

/// Round-off allowance when comparing accuracy loss to the threshold.
const LOSS_EPS: f64 = 1e-12;

/// Latency, resources and feasibility of one point. Hardware that cannot run
/// the model (e.g. ABfly blocks without attention engines) is an error here.
pub fn evaluate(point: &GridPoint, space: &SearchSpace, table: &AccuracyTable, c: &Constraints) -> Result<DesignPoint> {
    let cfg = point.model(space);
    let hw = point.hardware(space);
    let accuracy = table.lookup(&c.dataset, &cfg)?;
    let accuracy_loss = table.baseline(&c.dataset)? - accuracy;
    let report = sim_network(&cfg, &hw, Precision::Fp16)?;
    let resources = resource_model(&hw);
    let reason = if !c.budget.fits(&resources) {
        Some(Infeasible::Resources)
    } else if accuracy_loss > c.max_accuracy_loss + LOSS_EPS {
        Some(Infeasible::Accuracy)
    } else {
        None
    };
    Ok(DesignPoint {
        key: point.key(),
        grid: *point,
        accuracy,
        accuracy_loss,
        latency_s: Some(report.seconds),
        resources: Some(resources),
        feasible: reason.is_none(),
        reason,
    })
}

/// Like [`evaluate`], but an unbuildable accelerator becomes an infeasible
/// point instead of an error. Missing accuracy data still fails.
pub fn evaluate_or_reject(
    point: &GridPoint,
    space: &SearchSpace,
    table: &AccuracyTable,
    c: &Constraints,
) -> Result<DesignPoint> {
    match evaluate(point, space, table, c) {
        Err(Error::Config(_)) | Err(Error::Capacity { .. }) => {
            let cfg = point.model(space);
            let accuracy = table.lookup(&c.dataset, &cfg)?;
            Ok(DesignPoint {
                key: point.key(),
                grid: *point,
                accuracy,
                accuracy_loss: table.baseline(&c.dataset)? - accuracy,
                latency_s: None,
                resources: None,
                feasible: false,
                reason: Some(Infeasible::Hardware),
            })
        }
        other => other,
    }
}

/// Indices of the non-dominated points when minimizing the first coordinate
/// and maximizing the second. A point is dominated if another is no worse in
/// both and strictly better in one; exact ties all stay. Sorted by the first
/// coordinate, then the second (descending), then index.
pub fn pareto_indices(objectives: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, aa) = objectives[a];
        let (lb, ab) = objectives[b];
        la.total_cmp(&lb).then(ab.total_cmp(&aa)).then(a.cmp(&b))
    });
    let mut front = Vec::new();
    let mut best_before = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let lat = objectives[order[i]].0;
        let mut j = i;
        while j < order.len() && objectives[order[j]].0 == lat {
            j += 1;
        }
        // within a latency group the first entry has the highest accuracy
        let top = objectives[order[i]].1;
        if top > best_before {
            front.extend(order[i..j].iter().copied().filter(|&k| objectives[k].1 == top));
            best_before = top;
        }
        i = j;
    }
    front
}

/// Non-dominated subset of the evaluated points under (latency, accuracy),
/// sorted by latency with ties broken by key.
pub fn pareto_front(points: &[DesignPoint]) -> Vec<DesignPoint> {
    let timed: Vec<&DesignPoint> = points.iter().filter(|p| p.latency_s.is_some()).collect();
    let objectives: Vec<(f64, f64)> = timed
        .iter()
        .map(|p| (p.latency_s.unwrap(), p.accuracy))
        .collect();
    let mut front: Vec<DesignPoint> = pareto_indices(&objectives)
        .into_iter()
        .map(|i| timed[i].clone())
        .collect();
    front.sort_by(|a, b| {
        a.latency_s
            .unwrap()
            .total_cmp(&b.latency_s.unwrap())
            .then_with(|| a.key.cmp(&b.key))
    });
    front
}

/// Lowest-latency point of `front` whose accuracy loss is within
/// `max_accuracy_loss`; ties go to the lexicographically smaller key.
pub fn select(front: &[DesignPoint], max_accuracy_loss: f64) -> Result<DesignPoint> {
    front
        .iter()
        .filter(|p| p.latency_s.is_some() && p.accuracy_loss <= max_accuracy_loss + LOSS_EPS)
        .min_by(|a, b| {
            a.latency_s
                .unwrap()
                .total_cmp(&b.latency_s.unwrap())
                .then_with(|| a.key.cmp(&b.key))
        })
        .cloned()
        .ok_or(Error::NoFeasibleDesign)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DseResult {
    pub evaluated: usize,
    pub resource_feasible: usize,
    pub feasible: usize,
    /// Pareto front of the points that fit the device.
    pub front: Vec<DesignPoint>,
    pub selected: Option<DesignPoint>,
}

/// Evaluate every grid point (in parallel when enabled), keep those that fit
/// the device, extract the front and select from it.
pub fn run_dse(space: &SearchSpace, table: &AccuracyTable, c: &Constraints) -> Result<(DseResult, Vec<DesignPoint>)> {
    let grid = enumerate(space)?;
    let points: Vec<DesignPoint> = par::map(&grid, |p| evaluate_or_reject(p, space, table, c))
        .into_iter()
        .collect::<Result<_>>()?;
    let fitting: Vec<DesignPoint> = points
        .iter()
        .filter(|p| p.latency_s.is_some() && p.reason != Some(Infeasible::Resources))
        .cloned()
        .collect();
    let front = pareto_front(&fitting);
    let selected = match select(&front, c.max_accuracy_loss) {
        Ok(p) => Some(p),
        Err(Error::NoFeasibleDesign) => None,
        Err(e) => return Err(e),
    };
    let result = DseResult {
        evaluated: points.len(),
        resource_feasible: fitting.len(),
        feasible: points.iter().filter(|p| p.feasible).count(),
        front,
        selected,
    };
    Ok((result, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_space() -> SearchSpace {
        SearchSpace {
            d_hid: vec![64],
            r_ffn: vec![1],
            n_total: vec![1],
            n_abfly: vec![0],
            p_be: vec![4],
            p_bu: vec![4],
            p_qk: vec![0],
            p_sv: vec![0],
            n_heads: 2,
            seq_len: 128,
            p_head: 1,
            hardware: None,
        }
    }

    fn table(acc: f64) -> AccuracyTable {
        AccuracyTable {
            baseline: [("text".to_string(), 0.637)].into(),
            entries: vec![AccuracyEntry {
                matcher: ConfigMatch::default(),
                accuracy: [("text".to_string(), acc)].into(),
            }],
        }
    }

    fn constraints() -> Constraints {
        Constraints {
            dataset: "text".into(),
            max_accuracy_loss: 0.01,
            budget: DeviceBudget::vcu128(),
        }
    }

    fn dp(key: &str, lat: f64, acc: f64) -> DesignPoint {
        DesignPoint {
            key: key.into(),
            grid: enumerate(&tiny_space()).unwrap()[0],
            accuracy: acc,
            accuracy_loss: 0.637 - acc,
            latency_s: Some(lat),
            resources: None,
            feasible: true,
            reason: None,
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(enumerate(&tiny_space()).unwrap().len(), 1);
        assert_eq!(SearchSpace::lra_text().size(), 144_060);
        let mut s = tiny_space();
        s.p_bu.clear();
        assert!(enumerate(&s).is_err());
    }

    #[test]
    fn key_format() {
        let p = enumerate(&tiny_space()).unwrap()[0];
        assert_eq!(p.key(), "d0064-r1-t1-a0-be004-bu004-qk000-sv000");
    }

    #[test]
    fn accuracy_threshold() {
        let space = tiny_space();
        let p = enumerate(&space).unwrap()[0];
        let ok = evaluate(&p, &space, &table(0.632), &constraints()).unwrap();
        assert!(ok.feasible);
        let bad = evaluate(&p, &space, &table(0.620), &constraints()).unwrap();
        assert_eq!(bad.reason, Some(Infeasible::Accuracy));
    }

    #[test]
    fn resource_cap() {
        let mut space = tiny_space();
        space.p_be = vec![128];
        space.p_bu = vec![128];
        let p = enumerate(&space).unwrap()[0];
        let r = evaluate(&p, &space, &table(0.637), &constraints()).unwrap();
        assert_eq!(r.reason, Some(Infeasible::Resources));
    }

    #[test]
    fn missing_accuracy_is_an_error() {
        let space = tiny_space();
        let p = enumerate(&space).unwrap()[0];
        let mut t = table(0.6);
        t.entries[0].matcher.d_hid = Some(128);
        assert!(matches!(
            evaluate(&p, &space, &t, &constraints()),
            Err(Error::MissingAccuracy { .. })
        ));
    }

    #[test]
    fn attention_without_engines() {
        let mut space = tiny_space();
        space.n_abfly = vec![1];
        let p = enumerate(&space).unwrap()[0];
        assert!(evaluate(&p, &space, &table(0.637), &constraints()).is_err());
        let r = evaluate_or_reject(&p, &space, &table(0.637), &constraints()).unwrap();
        assert_eq!(r.reason, Some(Infeasible::Hardware));
    }

    #[test]
    fn front_basics() {
        let a = dp("a", 1.0, 0.6);
        assert_eq!(pareto_front(std::slice::from_ref(&a)), vec![a.clone()]);
        let b = dp("b", 2.0, 0.5);
        assert_eq!(pareto_front(&[b, a.clone()]), vec![a]);
        let t1 = dp("t1", 1.0, 0.6);
        let t2 = dp("t2", 1.0, 0.6);
        assert_eq!(pareto_front(&[t2.clone(), t1.clone()]), vec![t1, t2]);
    }

    #[test]
    fn selection() {
        assert!(matches!(select(&[], 0.01), Err(Error::NoFeasibleDesign)));
        let fast_bad = dp("z", 0.5, 0.5);
        let x = dp("x", 1.0, 0.637);
        let y = dp("y", 1.0, 0.637);
        let s = select(&[fast_bad.clone(), y, x], 0.01).unwrap();
        assert_eq!(s.key, "x");
        assert!(select(&[fast_bad], 0.01).is_err());
    }
}
