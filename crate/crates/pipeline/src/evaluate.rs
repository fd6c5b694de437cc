use std::collections::BTreeMap;
use std::sync::Arc;

use lamg_core::fem::{self, relative_error_values, Norm, TetMesh};
use lamg_core::geometry::{Rng, Vec3};
use lamg_core::mesher;
use lamg_core::wos::PoissonProblem;
use serde::{Deserialize, Serialize};

use crate::dataset::Shape;
use crate::methods::{Method, Run, RunRecord};
use crate::PipelineError;

/// Fixed probe points and high-resolution uniform mesh for one shape.
#[derive(Debug, Clone)]
pub struct Bench {
    pub shape: Shape,
    pub probes: Vec<Vec3>,
    pub reference_mesh: Arc<TetMesh>,
}

impl Bench {
    pub fn new(shape: Shape, probes: usize, reference_vertices: usize, probe_seed: u64) -> Result<Self, PipelineError> {
        let probes = shape.boundary.sample_interior(probes, &mut Rng::new(probe_seed))?;
        let (mesh, _) = mesher::mesh_uniform_with_vertices(&shape.boundary, reference_vertices)?;
        Ok(Self { shape, probes, reference_mesh: Arc::new(mesh) })
    }

    pub fn reference(&self, prob: &PoissonProblem) -> Result<Reference, PipelineError> {
        let sol = fem::solve_problem(self.reference_mesh.clone(), prob)?;
        Ok(Reference { values: sol.sample(&self.probes) })
    }
}

/// Reference solution at the bench probes.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub values: Vec<f64>,
}

/// Fills in the relative errors of `run` over the probes it covers.
pub fn evaluate(run: &mut Run, reference: &Reference) -> Result<(), PipelineError> {
    let k = run.at_probes.len();
    if k == 0 || k > reference.values.len() {
        return Err(PipelineError::Format(format!("run covers {k} of {} probes", reference.values.len())));
    }
    let r = &reference.values[..k];
    run.record.re_l2 = relative_error_values(&run.at_probes, r, Norm::L2)?;
    run.record.re_linf = relative_error_values(&run.at_probes, r, Norm::Linf)?;
    Ok(())
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Self {
        Self {
            min: quantile(values, 0.0),
            q1: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q3: quantile(values, 0.75),
            max: quantile(values, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub runs: usize,
    pub median_re_l2: f64,
    pub median_re_linf: f64,
    pub median_vertices: f64,
    pub median_total_s: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut by: BTreeMap<Method, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry(r.method).or_default().push(r);
    }
    by.into_iter()
        .map(|(method, rs)| {
            let col = |f: fn(&RunRecord) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                method,
                runs: rs.len(),
                median_re_l2: col(|r| r.re_l2),
                median_re_linf: col(|r| r.re_linf),
                median_vertices: col(|r| r.vertices as f64),
                median_total_s: col(|r| r.total_s),
            }
        })
        .collect()
}

/// Per-problem ratio of a baseline's total time to the lamg time on the
/// same (shape, problem).
pub fn speedups(records: &[RunRecord], baseline: Method) -> Vec<f64> {
    let lamg: BTreeMap<(&str, usize), f64> =
        records.iter().filter(|r| r.method == Method::Lamg).map(|r| ((r.shape.as_str(), r.problem), r.total_s)).collect();
    records
        .iter()
        .filter(|r| r.method == baseline)
        .filter_map(|r| lamg.get(&(r.shape.as_str(), r.problem)).map(|t| r.total_s / t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [7.0, 1.0, 3.0, 5.0];
        assert_eq!(median(&v), 4.0);
        assert_eq!(quantile(&v, 0.25), 2.5);
        assert_eq!(quantile(&v, 1.0), 7.0);
        assert_eq!(median(&[2.0]), 2.0);
    }

    #[test]
    fn reference_against_itself_is_exact() {
        let reference = Reference { values: vec![1.0, -2.0, 0.5] };
        let mut run = Run {
            record: RunRecord {
                method: Method::Uniform,
                shape: "cube".into(),
                problem: 0,
                n: 0,
                m: 0,
                eta: 0.0,
                vertices: 0,
                tets: 0,
                re_l2: f64::NAN,
                re_linf: f64::NAN,
                mc_s: 0.0,
                inference_s: 0.0,
                amr_s: 0.0,
                meshing_s: 0.0,
                fem_s: 0.0,
                total_s: 0.0,
            },
            at_probes: reference.values.clone(),
        };
        evaluate(&mut run, &reference).unwrap();
        assert_eq!((run.record.re_l2, run.record.re_linf), (0.0, 0.0));
        let zero = Reference { values: vec![0.0; 3] };
        assert!(evaluate(&mut run, &zero).is_err());
    }
}
