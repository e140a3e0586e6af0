use proptest::prelude::*;

use permnet::equivariant::{
    classify_component, commutant_space_dimension, count_components, enumerate_components, is_equivariant,
    project_commutant,
};
use permnet::invariant::{invariant_space, is_invariant, project_invariant, psi_compress, psi_expand};
use permnet::io::{parse_csv, to_csv};
use permnet::optimize::{fit_equivariant, fit_rank_bounded, EquivariantOptions, FitOptions};
use permnet::oracle::recursive_component_count;
use permnet::spectral::{commutant_dimension, eigen_multiplicities, real_base_change, Field};
use permnet::{Matrix, Permutation};

fn permutation(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n).prop_flat_map(|n| {
        Just((0..n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|image| Permutation::from_image(image).unwrap())
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn perm_and_matrix(max_n: usize) -> impl Strategy<Value = (Permutation, Matrix)> {
    permutation(max_n).prop_flat_map(|p| {
        let n = p.n();
        (Just(p), matrix(n, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cycle_notation_round_trips(p in permutation(12)) {
        let back = Permutation::parse(&p.to_string(), p.n()).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert!(p.compose(&p.inverse()).is_identity());
        prop_assert!(p.pow(p.order()).is_identity());
    }

    #[test]
    fn commutant_formula_matches_orbits(p in permutation(12)) {
        let formula = commutant_dimension(&p.cycles()) as usize;
        prop_assert_eq!(formula, commutant_space_dimension(std::slice::from_ref(&p)).unwrap());
    }

    #[test]
    fn real_base_change_is_orthogonal(p in permutation(10)) {
        let q = real_base_change(&p).matrix();
        let n = p.n();
        prop_assert!(q.t_matmul(&q).max_abs_diff(&Matrix::identity(n)) < 1e-10);
    }

    #[test]
    fn commutant_projection_is_idempotent((p, m) in perm_and_matrix(9)) {
        let gens = [p.clone()];
        let once = project_commutant(&m, &gens).unwrap();
        prop_assert!(is_equivariant(&once, &p, 1e-10));
        let twice = project_commutant(&once, &gens).unwrap();
        prop_assert!(twice.max_abs_diff(&once) < 1e-12);
        // The residual is orthogonal to the projection.
        prop_assert!(m.sub(&once).dot(&once).abs() < 1e-9 * (1.0 + m.frobenius_sq()));
    }

    #[test]
    fn invariant_projection_compresses((p, m) in perm_and_matrix(9)) {
        let space = invariant_space(std::slice::from_ref(&p), m.rows(), m.cols(), 1).unwrap();
        let inv = project_invariant(&m, &space.partition).unwrap();
        prop_assert!(is_invariant(&inv, &space.partition));
        let compact = psi_compress(&inv, &space.partition, 1e-10).unwrap();
        prop_assert_eq!(compact.cols(), space.partition.k());
        prop_assert!(psi_expand(&compact, &space.partition).unwrap().max_abs_diff(&inv) < 1e-12);
    }

    #[test]
    fn component_counts_agree(p in permutation(9), r in 0usize..6) {
        let spec = eigen_multiplicities(&p.cycles());
        for field in [Field::Real, Field::Complex] {
            let closed = count_components(&spec, r, field);
            let listed = enumerate_components(&spec, r, field, 1_000_000).unwrap().count();
            prop_assert_eq!(closed.to_string(), listed.to_string());
            if let Ok(rec) = recursive_component_count(&spec, r, field) {
                prop_assert_eq!(closed, rec);
            }
        }
    }

    #[test]
    fn equivariant_fit_is_feasible_and_bounded(
        (p, x, y) in permutation(7).prop_flat_map(|p| {
            let n = p.n();
            (Just(p), matrix(n, 2 * n + 3), matrix(n, 2 * n + 3))
        }),
        r in 1usize..4,
    ) {
        let r = r.min(p.n());
        let fit = fit_equivariant(&x, &y, &p, r, None, &EquivariantOptions::default()).unwrap();
        prop_assert!(is_equivariant(&fit.minimizer, &p, 1e-8));
        let rv = classify_component(&fit.minimizer, &p, 1e-8).unwrap();
        prop_assert!(rv.total_rank <= r);
        let free = fit_rank_bounded(&x, &y, r, &FitOptions::default()).unwrap();
        prop_assert!(free.loss <= fit.loss + 1e-8 * (1.0 + fit.loss));
        prop_assert!(fit.loss <= y.frobenius_sq() + 1e-8);
    }

    #[test]
    fn csv_round_trips(m in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, r * c)
            .prop_map(move |d| Matrix::from_vec(r, c, d).unwrap())
    })) {
        prop_assert_eq!(parse_csv(&to_csv(&m)).unwrap(), m);
    }
}
