//! Identity and consistency suite run by `calabi verify`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{DiagnosticsRow, ExperimentResult};
use crate::error::Result;
use crate::flow::FlowProblem;
use crate::io::{read_csv_from, read_snapshot_from, write_csv_to, write_snapshot_to, SnapshotHeader};
use crate::lattice::{Mode, ScalarField, TorusLattice};
use crate::metric::ReferenceGeometry;
use crate::spectral::SpectralOps;

/// Seed of the shipped forcing corpus.
pub const CORPUS_SEED: u64 = 0x5eed_ca1a;
/// Fields per dimension in the forcing corpus.
pub const CORPUS_FIELDS_PER_DIM: usize = 10;
pub const CORPUS_MAX_AMPLITUDE: f64 = 0.01;
pub const DUAL_FORMULA_TOL: f64 = 1e-6;
pub const IDENTITY_TOL_N1: f64 = 1e-9;
pub const IDENTITY_TOL_N2: f64 = 1e-8;

/// Problems paired with the potentials evaluated on them.
pub type Corpus = Vec<(FlowProblem<f64>, Vec<ScalarField<f64>>)>;

/// Flat problem on `(2π)`-periodic tori and random low-band potentials:
/// `n = 1, N = 64` with frequencies in `[-3, 3]`, `n = 2, N = 16` with frequencies in `[-1, 1]`.
pub fn forcing_corpus(seed: u64) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (n, size, band) in [(1usize, 64usize, 3i64), (2, 16, 1)] {
        let lat = TorusLattice::new(n, size, std::f64::consts::TAU)?;
        let problem = FlowProblem::with_default_floor(SpectralOps::new(lat), ReferenceGeometry::euclidean(lat))?;
        let mut fields = Vec::new();
        while fields.len() < CORPUS_FIELDS_PER_DIM {
            let modes: Vec<Mode> = (0..4)
                .map(|_| {
                    let k: Vec<i64> = (0..2 * n).map(|_| rng.gen_range(-band..=band)).collect();
                    Mode::new(k, rng.gen_range(-CORPUS_MAX_AMPLITUDE..CORPUS_MAX_AMPLITUDE), rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect();
            let phi = ScalarField::from_modes(lat, &modes)?;
            if phi.sup_norm() > 0.0 {
                fields.push(phi);
            }
        }
        out.push((problem, fields));
    }
    Ok(out)
}

fn rel_l2(a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
    ((a - b).sum_squares() / b.sum_squares()).sqrt()
}

/// Worst relative `L²` gap between the direct and expanded forcing, per dimension.
pub fn dual_formula_errors(corpus: &Corpus) -> Result<Vec<(usize, f64)>> {
    corpus
        .iter()
        .map(|(p, fields)| {
            let mut worst: f64 = 0.0;
            for phi in fields {
                worst = worst.max(rel_l2(&p.forcing_expanded(phi)?, &p.forcing(phi)?));
            }
            Ok((p.ops().lattice().n(), worst))
        })
        .collect()
}

/// Worst fourth-order identity residual, per dimension.
pub fn identity_residuals(corpus: &Corpus) -> Result<Vec<(usize, f64)>> {
    corpus
        .iter()
        .map(|(p, fields)| {
            let mut worst: f64 = 0.0;
            for phi in fields {
                worst = worst.max(p.fourth_order_identity_residual(phi)?);
            }
            Ok((p.ops().lattice().n(), worst))
        })
        .collect()
}

/// Composite Simpson rule for `∫₀^τ e^{−(τ−s)A} f ds` on the coefficients of `f`.
fn simpson_duhamel(p: &FlowProblem<f64>, f: &ScalarField<f64>, tau: f64, intervals: usize) -> ScalarField<f64> {
    let ops = p.ops();
    let c = ops.forward(f);
    let lambda = p.symbol().lambda();
    let h = tau / intervals as f64;
    let mut acc = c.clone();
    for (slot, a) in acc.coeffs_mut().iter_mut().enumerate() {
        let l = lambda[slot];
        let g = |s: f64| (-(tau - s) * l).exp();
        let mut w = g(0.0) + g(tau);
        for i in 1..intervals {
            w += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        *a *= w * h / 3.0;
    }
    ops.inverse_real(&acc)
}

pub fn verify_suite(seed: u64) -> Result<ExperimentResult> {
    let start = Instant::now();
    let mut r = ExperimentResult::new("verify");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (n, size) in [(1usize, 64usize), (2, 16)] {
        let lat = TorusLattice::new(n, size, 1.0)?;
        let ops = SpectralOps::new(lat);
        let vals = (0..lat.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = ScalarField::from_values(lat, vals)?;
        let c = ops.forward(&f);
        let back = ops.inverse_real(&c);
        let rt = (&back - &f).sup_norm();
        r.check(format!("fft round trip n={n} N={size}"), rt, "≤ 1e-13", rt <= 1e-13);
        let parseval = ((f.sum_squares() / lat.len() as f64) / c.energy() - 1.0).abs();
        r.check(format!("parseval n={n} N={size}"), parseval, "≤ 1e-12", parseval <= 1e-12);
    }

    let lat = TorusLattice::new(1, 64, 1.0)?;
    let p = FlowProblem::with_default_floor(SpectralOps::new(lat), ReferenceGeometry::euclidean(lat))?;
    let modes: Vec<Mode> = (0..5)
        .map(|_| Mode::new(vec![rng.gen_range(-3..=3), rng.gen_range(-3..=3)], rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0)))
        .collect();
    let x = ScalarField::from_modes(lat, &modes)?;
    let (s, t) = (3e-4, 7e-4);
    let sym = p.symbol();
    let two = sym.semigroup_apply(p.ops(), &sym.semigroup_apply(p.ops(), &x, s)?, t)?;
    let one = sym.semigroup_apply(p.ops(), &x, s + t)?;
    let law = (&two - &one).sup_norm() / x.sup_norm();
    r.check("semigroup law e^{-sA}e^{-tA} = e^{-(s+t)A}", law, "≤ 1e-13", law <= 1e-13);
    let tau = 1e-3;
    let exact = sym.duhamel_phi1(p.ops(), &x, tau)?;
    let quad = simpson_duhamel(&p, &x, tau, 10_000);
    let duhamel = (&exact - &quad).sup_norm() / quad.sup_norm();
    r.check("duhamel coefficient vs Simpson (10^4 intervals)", duhamel, "≤ 1e-10", duhamel <= 1e-10);

    let corpus = forcing_corpus(CORPUS_SEED)?;
    for (n, e) in dual_formula_errors(&corpus)? {
        r.check(format!("dual forcing formula n={n}"), e, format!("≤ {DUAL_FORMULA_TOL}"), e <= DUAL_FORMULA_TOL);
    }
    for (n, e) in identity_residuals(&corpus)? {
        let tol = if n == 1 { IDENTITY_TOL_N1 } else { IDENTITY_TOL_N2 };
        r.check(format!("fourth-order identity residual n={n}"), e, format!("≤ {tol}"), e <= tol);
    }

    let snap_field = &corpus[1].1[0];
    let mut buf = Vec::new();
    write_snapshot_to(&mut buf, snap_field, &SnapshotHeader::for_field(snap_field, 1.0 / 3.0, "phi"))?;
    let (back, _) = read_snapshot_from(buf.as_slice())?;
    let same = back.values().iter().zip(snap_field.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    r.check("snapshot round trip bit-exact", same as u8 as f64, "= 1", same);

    let rows: Vec<DiagnosticsRow> = (0..8)
        .map(|i| {
            let mut v = [0.0; 15];
            v.iter_mut().for_each(|x| *x = rng.gen::<f64>() * 10f64.powi(rng.gen_range(-20..20)));
            DiagnosticsRow {
                t: v[0],
                tau: v[1],
                calabi_energy: v[2],
                max_abs_r: v[3],
                rbar: -v[4],
                volume: v[5],
                c1_bound: v[6],
                c2_bound: v[7],
                max_riemann: v[8],
                holder_2a: v[9],
                holder_4a: v[10],
                weighted_norm: v[11],
                picard_iters: i,
                picard_last_ratio: v[13],
                phi_mean: v[14],
            }
        })
        .collect();
    let mut csv = Vec::new();
    write_csv_to(&mut csv, &rows)?;
    let same = read_csv_from(csv.as_slice())? == rows;
    r.check("csv round trip bit-exact", same as u8 as f64, "= 1", same);

    r.wall_clock = start.elapsed();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_bounded() {
        let a = forcing_corpus(CORPUS_SEED).unwrap();
        let b = forcing_corpus(CORPUS_SEED).unwrap();
        assert_eq!(a.len(), 2);
        for ((_, fa), (_, fb)) in a.iter().zip(&b) {
            assert_eq!(fa.len(), CORPUS_FIELDS_PER_DIM);
            assert_eq!(fa, fb);
            assert!(fa.iter().all(|f| f.sup_norm() <= 4.0 * CORPUS_MAX_AMPLITUDE));
        }
        assert_ne!(forcing_corpus(1).unwrap()[0].1, a[0].1);
    }

    #[test]
    fn suite_passes() {
        let r = verify_suite(CORPUS_SEED).unwrap();
        assert!(r.pass, "{r}");
        assert!(r.measurements.len() >= 12);
    }
}
