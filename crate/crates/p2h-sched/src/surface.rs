//! Polyhedral over-approximation of the concave production surface.
//!
//! The production rate `f(P, T)` derived in [`crate::physics`] is concave and
//! increasing in electrolytic power. For the scheduling model it is relaxed
//! to `rate <= A_j*P + B_j*T + C_j` over a family of half-spaces obtained
//! from the upward facets of the 3-D convex hull of a sample grid. Facet
//! constants are then lifted by the exact maximum of `f - facet` over the
//! operating rectangle, so the envelope dominates the smooth surface
//! everywhere, not just at the samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hull::{upper_hull_planes, Plane};
use crate::physics::{production_from_power, ElectrolyzerParams};

/// Default power-axis sample count.
pub const DEFAULT_POWER_SAMPLES: usize = 20;
/// Default temperature-axis sample count.
pub const DEFAULT_TEMP_SAMPLES: usize = 10;
/// Default facet budget.
pub const DEFAULT_MAX_FACETS: usize = 40;

/// One evaluation of the production function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    /// Electrolytic power [MW].
    pub power: f64,
    /// Stack temperature [K].
    pub temperature: f64,
    /// Hydrogen production rate [mol/s].
    pub rate: f64,
}

/// Rectangular sample grid over `[0, rated] x [ambient, max_temp]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub powers: Vec<f64>,
    pub temps: Vec<f64>,
    /// Row-major: `samples[ti * powers.len() + pi]`.
    pub samples: Vec<SurfaceSample>,
}

impl SampleGrid {
    pub fn at(&self, pi: usize, ti: usize) -> &SurfaceSample {
        &self.samples[ti * self.powers.len() + pi]
    }
}

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("need at least 2 samples per axis, got {0} x {1}")]
    GridTooSmall(usize, usize),
    #[error(
        "samples are not concave along power at temperature index {t_index}: \
         second difference {second_diff:.6e} at power indices {p_indices:?}"
    )]
    NotConcave {
        t_index: usize,
        p_indices: [usize; 3],
        second_diff: f64,
    },
    #[error("sample cloud is degenerate; cannot build a facet set")]
    Degenerate,
    #[error("max_facets must be at least 1")]
    NoFacetBudget,
}

/// Evaluates the derived production function on a rectangular grid.
pub fn sample_grid(
    params: &ElectrolyzerParams,
    n_power: usize,
    n_temp: usize,
) -> Result<SampleGrid, SurfaceError> {
    if n_power < 2 || n_temp < 2 {
        return Err(SurfaceError::GridTooSmall(n_power, n_temp));
    }
    let powers: Vec<f64> = (0..n_power)
        .map(|i| params.rated_power * i as f64 / (n_power - 1) as f64)
        .collect();
    let temps: Vec<f64> = (0..n_temp)
        .map(|j| {
            params.ambient_temp
                + (params.max_temp - params.ambient_temp) * j as f64 / (n_temp - 1) as f64
        })
        .collect();
    let mut samples = Vec::with_capacity(n_power * n_temp);
    for &t in &temps {
        for &p in &powers {
            samples.push(SurfaceSample {
                power: p,
                temperature: t,
                rate: production_from_power(p, t, params),
            });
        }
    }
    Ok(SampleGrid {
        powers,
        temps,
        samples,
    })
}

/// Verifies discrete concavity along the power axis at every temperature row.
///
/// Returns the first violating triple of power indices otherwise. The
/// tolerance is relative to the sample scale; exact linear data passes.
pub fn check_concavity(grid: &SampleGrid) -> Result<(), SurfaceError> {
    let scale = grid
        .samples
        .iter()
        .map(|s| s.rate.abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let tol = 1e-9 * scale;
    for ti in 0..grid.temps.len() {
        for pi in 0..grid.powers.len() - 2 {
            let (s0, s1, s2) = (grid.at(pi, ti), grid.at(pi + 1, ti), grid.at(pi + 2, ti));
            // second difference on a possibly non-uniform grid
            let d01 = (s1.rate - s0.rate) / (s1.power - s0.power);
            let d12 = (s2.rate - s1.rate) / (s2.power - s1.power);
            if d12 - d01 > tol {
                return Err(SurfaceError::NotConcave {
                    t_index: ti,
                    p_indices: [pi, pi + 1, pi + 2],
                    second_diff: d12 - d01,
                });
            }
        }
    }
    Ok(())
}

/// Over-approximating half-space family: `rate <= A*P + B*T + C` per facet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSet {
    /// `[A, B, C]` triples; `A` in mol/s/MW, `B` in mol/s/K, `C` in mol/s.
    pub facets: Vec<[f64; 3]>,
}

impl HalfspaceSet {
    /// Envelope value: minimum over facets, floored at zero.
    pub fn envelope_rate(&self, power: f64, temperature: f64) -> f64 {
        self.facets
            .iter()
            .map(|f| f[0] * power + f[1] * temperature + f[2])
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Canonical ordering so identical inputs serialize identically.
    fn canonicalize(&mut self) {
        self.facets
            .sort_by(|x, y| x.partial_cmp(y).expect("facet coefficients are finite"));
    }
}

/// Builds the upper concave envelope of a sample grid.
///
/// The facets are the upward faces of the 3-D convex hull of the samples,
/// deduplicated, constant-lifted so no sample is cut off, and greedily
/// reduced to `max_facets` by dropping whichever facet increases the maximum
/// envelope-vs-sample gap the least.
pub fn build_halfspaces(grid: &SampleGrid, max_facets: usize) -> Result<HalfspaceSet, SurfaceError> {
    if max_facets == 0 {
        return Err(SurfaceError::NoFacetBudget);
    }
    check_concavity(grid)?;
    let points: Vec<[f64; 3]> = grid
        .samples
        .iter()
        .map(|s| [s.power, s.temperature, s.rate])
        .collect();
    let planes = upper_hull_planes(&points).ok_or(SurfaceError::Degenerate)?;
    let mut facets = dedupe_planes(&planes, grid);
    // numerical safety: lift each facet to clear every sample
    for f in &mut facets {
        let worst = grid
            .samples
            .iter()
            .map(|s| s.rate - (f[0] * s.power + f[1] * s.temperature + f[2]))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 0.0 {
            f[2] += worst;
        }
    }
    let mut set = HalfspaceSet { facets };
    reduce_facets(&mut set, grid, max_facets);
    set.canonicalize();
    Ok(set)
}

fn dedupe_planes(planes: &[Plane], grid: &SampleGrid) -> Vec<[f64; 3]> {
    let rate_scale = grid
        .samples
        .iter()
        .map(|s| s.rate.abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut facets: Vec<[f64; 3]> = Vec::new();
    'next: for p in planes {
        let cand = [p.a, p.b, p.c];
        for f in &facets {
            // planes equal when they agree over the whole rectangle
            let da = (cand[0] - f[0]).abs() * grid.powers.last().unwrap();
            let db = (cand[1] - f[1]).abs() * grid.temps.last().unwrap();
            let dc = (cand[2] - f[2]).abs();
            if da + db + dc < 1e-7 * rate_scale {
                continue 'next;
            }
        }
        facets.push(cand);
    }
    facets
}

/// Greedy facet reduction: repeatedly drop the facet whose removal keeps the
/// maximum over-approximation gap at the samples smallest. Removal can only
/// raise the envelope, so domination of the surface is preserved.
fn reduce_facets(set: &mut HalfspaceSet, grid: &SampleGrid, max_facets: usize) {
    while set.facets.len() > max_facets {
        let mut best: Option<(usize, f64)> = None;
        for drop in 0..set.facets.len() {
            let mut gap = 0.0f64;
            for s in &grid.samples {
                let env = set
                    .facets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, f)| f[0] * s.power + f[1] * s.temperature + f[2])
                    .fold(f64::INFINITY, f64::min);
                gap = gap.max(env - s.rate);
            }
            if best.map_or(true, |(_, g)| gap < g) {
                best = Some((drop, gap));
            }
        }
        let (drop, _) = best.expect("at least one facet");
        set.facets.remove(drop);
    }
}

/// Exact maximum of `f(P, T) - (A*P + B*T + C)` over the operating rectangle.
///
/// Along power the difference is concave with a closed-form stationary
/// point; along temperature `f` is convex, so the maximum sits on one of the
/// two temperature edges.
pub fn max_gap_below(facet: [f64; 3], params: &ElectrolyzerParams) -> f64 {
    let [a, b, c] = facet;
    let slope = params.faraday_slope();
    let g = 1e6 / params.n_cells; // W per MW per cell
    let mut worst = f64::NEG_INFINITY;
    for t in [params.ambient_temp, params.max_temp] {
        let u = params.voltage_coeffs.a0 + params.voltage_coeffs.a1 * t;
        // d f / dP = slope * g / sqrt(u^2 + 4 a2 g P) = a  =>  stationary P
        let mut candidates = vec![0.0, params.rated_power];
        if a > 0.0 {
            let s = slope * g / a;
            if s > u {
                let p_star = (s * s - u * u) / (4.0 * params.voltage_coeffs.a2 * g);
                if p_star > 0.0 && p_star < params.rated_power {
                    candidates.push(p_star);
                }
            }
        }
        for p in candidates {
            let diff = production_from_power(p, t, params) - (a * p + b * t + c);
            worst = worst.max(diff);
        }
    }
    worst
}

/// Lifts every facet constant so the envelope dominates the derived
/// production function over the whole rectangle. Returns the largest lift
/// applied.
pub fn lift_to_dominate(set: &mut HalfspaceSet, params: &ElectrolyzerParams) -> f64 {
    let mut max_lift = 0.0f64;
    for f in &mut set.facets {
        let gap = max_gap_below(*f, params);
        if gap > 0.0 {
            // nudge by one ulp-scale margin so strict domination survives
            // floating-point evaluation at arbitrary probe points
            let lift = gap + 1e-12 * (1.0 + f[2].abs());
            f[2] += lift;
            max_lift = max_lift.max(lift);
        }
    }
    set.canonicalize();
    max_lift
}

/// Full construction used by the scheduler: grid sampling, hull envelope,
/// domination lift, facet budget.
pub fn build_envelope(
    params: &ElectrolyzerParams,
    n_power: usize,
    n_temp: usize,
    max_facets: usize,
) -> Result<HalfspaceSet, SurfaceError> {
    let grid = sample_grid(params, n_power, n_temp)?;
    let mut set = build_halfspaces(&grid, max_facets)?;
    lift_to_dominate(&mut set, params);
    Ok(set)
}

/// Envelope with the crate defaults (20 x 10 grid, 40 facets).
pub fn default_envelope(params: &ElectrolyzerParams) -> Result<HalfspaceSet, SurfaceError> {
    build_envelope(
        params,
        DEFAULT_POWER_SAMPLES,
        DEFAULT_TEMP_SAMPLES,
        DEFAULT_MAX_FACETS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::VoltageCoeffs;

    fn reference_like_params() -> ElectrolyzerParams {
        ElectrolyzerParams {
            rated_power: 5.0,
            n_cells: 1000.0,
            voltage_coeffs: VoltageCoeffs {
                a0: 2.2266,
                a1: -0.0022,
                a2: 2.2e-4,
            },
            thermal_neutral_voltage: 1.48,
            faraday_efficiency: 0.98,
            faraday_constant: 96485.3,
            heat_capacity: 74.533,
            dissipation_conductance: 0.0055,
            ambient_temp: 298.0,
            coolant_temp: 278.0,
            max_temp: 373.0,
            cooling_conductance: 0.04,
            max_heating_power: 0.5,
            heating_eff: 0.95,
            cooling_eff: 3.0,
            aux_power: 0.05,
            max_cell_voltage: 2.1,
            hto_inflow: 0.003182,
            hto_discharge_const: 5.68e5,
            o2_holdup: 4.0e4,
            hto_limit: 0.02,
            ramp_up: 400.0,
            ramp_down: -1200.0,
            min_idle_steps: 2,
        }
    }

    #[test]
    fn grid_corners_and_zero_power_row() {
        let p = reference_like_params();
        let grid = sample_grid(&p, 2, 2).unwrap();
        assert_eq!(grid.samples.len(), 4);
        let grid = sample_grid(&p, 6, 4).unwrap();
        for ti in 0..4 {
            assert_eq!(grid.at(0, ti).rate, 0.0, "zero power, zero production");
        }
        // monotone nondecreasing in P at fixed T
        for ti in 0..4 {
            for pi in 0..5 {
                assert!(grid.at(pi + 1, ti).rate >= grid.at(pi, ti).rate);
            }
        }
    }

    #[test]
    fn derived_surface_is_concave_along_power() {
        let p = reference_like_params();
        let grid = sample_grid(&p, 30, 8).unwrap();
        check_concavity(&grid).unwrap();
    }

    #[test]
    fn concavity_check_flags_spiked_sample() {
        let p = reference_like_params();
        let mut grid = sample_grid(&p, 10, 3).unwrap();
        let idx = 1 * grid.powers.len() + 5;
        grid.samples[idx].rate *= 1.5;
        match check_concavity(&grid) {
            Err(SurfaceError::NotConcave {
                t_index, p_indices, ..
            }) => {
                assert_eq!(t_index, 1);
                assert!(p_indices.contains(&5), "witness must include the spike");
            }
            other => panic!("expected concavity violation, got {other:?}"),
        }
    }

    #[test]
    fn linear_samples_pass_concavity_and_make_one_facet() {
        // hand-made planar surface
        let grid = SampleGrid {
            powers: vec![0.0, 1.0],
            temps: vec![300.0, 350.0],
            samples: vec![
                SurfaceSample {
                    power: 0.0,
                    temperature: 300.0,
                    rate: 1.0,
                },
                SurfaceSample {
                    power: 1.0,
                    temperature: 300.0,
                    rate: 3.0,
                },
                SurfaceSample {
                    power: 0.0,
                    temperature: 350.0,
                    rate: 2.0,
                },
                SurfaceSample {
                    power: 1.0,
                    temperature: 350.0,
                    rate: 4.0,
                },
            ],
        };
        check_concavity(&grid).unwrap();
        let set = build_halfspaces(&grid, 40).unwrap();
        assert_eq!(set.facets.len(), 1, "coplanar corners give a single facet");
        for s in &grid.samples {
            let v = set.facets[0][0] * s.power + set.facets[0][1] * s.temperature + set.facets[0][2];
            assert!((v - s.rate).abs() < 1e-9, "exact at all corners");
        }
        // single half-space evaluates affinely (above the floor)
        assert!(
            (set.envelope_rate(0.5, 325.0) - (set.facets[0][0] * 0.5 + set.facets[0][1] * 325.0 + set.facets[0][2]))
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn envelope_dominates_at_samples_and_touches_vertices() {
        let p = reference_like_params();
        let grid = sample_grid(&p, 20, 10).unwrap();
        let set = build_halfspaces(&grid, usize::MAX).unwrap();
        let mut touched = 0;
        for s in &grid.samples {
            let env = set
                .facets
                .iter()
                .map(|f| f[0] * s.power + f[1] * s.temperature + f[2])
                .fold(f64::INFINITY, f64::min);
            assert!(env >= s.rate - 1e-9, "never under-approximates a sample");
            if (env - s.rate).abs() < 1e-6 {
                touched += 1;
            }
        }
        // hull vertices are met exactly; corners at least
        assert!(touched >= 4, "expected exact contact at hull vertices");
    }

    #[test]
    fn lifted_envelope_dominates_dense_grid_with_small_gap() {
        let p = reference_like_params();
        let set = build_envelope(&p, 20, 10, 40).unwrap();
        assert!(set.facets.len() <= 40);
        let rated_rate = p.rated_production();
        let mut max_gap = 0.0f64;
        for i in 0..100 {
            for j in 0..50 {
                let power = p.rated_power * i as f64 / 99.0;
                let temp = p.ambient_temp + (p.max_temp - p.ambient_temp) * j as f64 / 49.0;
                let f = production_from_power(power, temp, &p);
                let env = set.envelope_rate(power, temp);
                assert!(
                    env >= f,
                    "envelope under f at P={power} T={temp}: {env} < {f}"
                );
                max_gap = max_gap.max(env - f);
            }
        }
        assert!(
            max_gap < 0.01 * rated_rate,
            "max gap {max_gap} exceeds 1% of rated {rated_rate}"
        );
    }

    #[test]
    fn zero_power_envelope_is_small() {
        let p = reference_like_params();
        let set = build_envelope(&p, 20, 10, 40).unwrap();
        for j in 0..10 {
            let temp = 298.0 + 75.0 * j as f64 / 9.0;
            let env = set.envelope_rate(0.0, temp);
            assert!(
                env < 1e-3 * p.rated_production(),
                "envelope at zero power should be near zero, got {env}"
            );
        }
    }

    #[test]
    fn facet_reduction_keeps_domination() {
        let p = reference_like_params();
        let grid = sample_grid(&p, 20, 10).unwrap();
        let full = build_halfspaces(&grid, usize::MAX).unwrap();
        let reduced = build_halfspaces(&grid, 12).unwrap();
        assert!(reduced.facets.len() <= 12);
        assert!(full.facets.len() >= reduced.facets.len());
        for s in &grid.samples {
            let env_r = reduced
                .facets
                .iter()
                .map(|f| f[0] * s.power + f[1] * s.temperature + f[2])
                .fold(f64::INFINITY, f64::min);
            let env_f = full
                .facets
                .iter()
                .map(|f| f[0] * s.power + f[1] * s.temperature + f[2])
                .fold(f64::INFINITY, f64::min);
            assert!(env_r >= s.rate - 1e-9);
            assert!(env_r >= env_f - 1e-9, "reduction can only raise the roof");
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let p = reference_like_params();
        let a = build_envelope(&p, 20, 10, 40).unwrap();
        let b = build_envelope(&p, 20, 10, 40).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn json_round_trip() {
        let p = reference_like_params();
        let set = build_envelope(&p, 8, 4, 20).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: HalfspaceSet = serde_json::from_str(&json).unwrap();
        assert_eq!(set, back);
    }
}
