use num_rational::BigRational;
use proptest::prelude::*;

use resilient_te::lp::{solve_lp, solve_mip, LinearProgram, Sense, Status};
use resilient_te::scalar::Scalar;

/// Small integer program data: rows of (coefficients, sense, rhs) plus an
/// objective, all over nonnegative variables capped by a budget row.
#[derive(Debug, Clone)]
struct Data {
    n: usize,
    rows: Vec<(Vec<i64>, Sense, i64)>,
    objective: Vec<i64>,
}

fn data() -> impl Strategy<Value = Data> {
    (2usize..=4).prop_flat_map(|n| {
        let row = (
            prop::collection::vec(-3i64..=4, n),
            prop_oneof![Just(Sense::Le), Just(Sense::Ge), Just(Sense::Eq)],
            -2i64..=8,
        );
        (
            prop::collection::vec(row, 1..=4),
            prop::collection::vec(-3i64..=5, n),
        )
            .prop_map(move |(rows, objective)| Data { n, rows, objective })
    })
}

fn build<T: Scalar>(d: &Data, binary: bool) -> LinearProgram<T> {
    let mut lp = LinearProgram::<T>::maximize();
    let x: Vec<_> = (0..d.n)
        .map(|i| {
            if binary {
                lp.add_binary(format!("x{i}"))
            } else {
                lp.add_nonneg(format!("x{i}"))
            }
        })
        .collect();
    let int = |v: i64| T::from_i64(v).unwrap();
    for (r, (coeffs, sense, rhs)) in d.rows.iter().enumerate() {
        let terms = x.iter().zip(coeffs).map(|(&v, &c)| (v, int(c))).collect();
        lp.add_row(format!("r{r}"), terms, *sense, int(*rhs));
    }
    lp.add_row("budget", x.iter().map(|&v| (v, T::one())).collect(), Sense::Le, int(10));
    lp.set_objective(x.iter().zip(&d.objective).map(|(&v, &c)| (v, int(c))).collect());
    lp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn float_and_exact_simplex_agree(d in data()) {
        let f = solve_lp(&build::<f64>(&d, false)).unwrap();
        let e = solve_lp(&build::<BigRational>(&d, false)).unwrap();
        prop_assert_eq!(f.status, e.status);
        if e.status == Status::Optimal {
            prop_assert!((f.objective - e.objective.to_f64_lossy()).abs() <= 1e-7);
            let lp = build::<BigRational>(&d, false);
            prop_assert_eq!(lp.max_violation(&e.primal), BigRational::from_integer(0.into()));
        }
    }

    #[test]
    fn float_and_exact_branch_and_bound_agree(d in data()) {
        let f = solve_mip(&build::<f64>(&d, true)).unwrap();
        let e = solve_mip(&build::<BigRational>(&d, true)).unwrap();
        prop_assert_eq!(f.status, e.status);
        if e.status == Status::Optimal {
            prop_assert!((f.objective - e.objective.to_f64_lossy()).abs() <= 1e-7);
            // Oracle: every 0/1 assignment.
            let lp = build::<f64>(&d, true);
            let mut best = f64::NEG_INFINITY;
            for mask in 0..(1u32 << d.n) {
                let x: Vec<f64> = (0..d.n).map(|i| ((mask >> i) & 1) as f64).collect();
                if lp.max_violation(&x) <= 1e-9 {
                    best = best.max(lp.objective_at(&x));
                }
            }
            prop_assert!((best - f.objective).abs() <= 1e-7);
        }
    }
}
