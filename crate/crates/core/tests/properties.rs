use calabi_core::io::{format_g17, read_snapshot, write_snapshot};
use calabi_core::{ScalarField64, SnapshotHeader, SpectralOps64, TorusLattice64};
use proptest::prelude::*;

fn field(n: usize, size: usize, period: f64, values: Vec<f64>) -> ScalarField64 {
    ScalarField64::from_values(TorusLattice64::new(n, size, period).unwrap(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g17_text_parses_back_to_the_same_bits(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let y: f64 = format_g17(x).parse().unwrap();
        prop_assert_eq!(y.to_bits(), x.to_bits());
    }

    #[test]
    fn transform_round_trip_is_exact_to_rounding(values in prop::collection::vec(-1e3..1e3f64, 64)) {
        let f = field(1, 8, 1.0, values);
        let ops = SpectralOps64::new(*f.lattice());
        let back = ops.inverse_real(&ops.forward(&f));
        let err = (&back - &f).sup_norm();
        prop_assert!(err <= 1e-12 * (1.0 + f.sup_norm()), "round trip error {err}");
    }

    #[test]
    fn snapshot_file_round_trip_is_bit_exact(
        values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 4096),
        t in 0.0..1e6f64,
    ) {
        let f = field(2, 8, 2.5, values);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.grd");
        write_snapshot(&path, &f, &SnapshotHeader::for_field(&f, t, "phi")).unwrap();
        let (g, h) = read_snapshot(&path).unwrap();
        prop_assert_eq!(h.t.to_bits(), t.to_bits());
        prop_assert_eq!((h.n, h.size, h.period), (2, 8, 2.5));
        prop_assert!(g.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
