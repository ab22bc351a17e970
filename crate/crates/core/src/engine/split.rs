use crate::error::{Error, Result};
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;

/// Rewrites a free-sign problem over `[A, −A]` with non-negative
/// coefficients `z`, so that `a = z⁺ − z⁻`. Keeps `s` and `λ`; the penalty
/// defaults to L1.
pub fn split_problem(problem: &SensingProblem, penalty: Option<Penalty>) -> Result<SensingProblem> {
    if problem.sign_mode() != SignMode::Free {
        return Err(Error::InvalidParameter(
            "only free-sign problems need splitting".into(),
        ));
    }
    let a = problem.matrix();
    let doubled = a.hstack(&a.scaled(-1.0))?;
    SensingProblem::new(
        doubled,
        problem.observation().to_vec(),
        problem.lambda(),
        penalty.unwrap_or(Penalty::L1),
        SignMode::Nonneg,
    )
}

/// `z[..N] − z[N..]`.
pub fn merge_split_solution(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            what: "split solution",
            expected: z.len() + 1,
            found: z.len(),
        });
    }
    if let Some(bad) = z.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "split coefficients must be non-negative, found {bad}"
        )));
    }
    let (pos, neg) = z.split_at(z.len() / 2);
    Ok(pos.iter().zip(neg).map(|(p, n)| p - n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{dot, DenseMatrix};

    #[test]
    fn merge_examples() {
        assert_eq!(merge_split_solution(&[0.5, 0.0]).unwrap(), vec![0.5]);
        assert_eq!(merge_split_solution(&[0.0, 1.0, 2.0, 0.5]).unwrap(), vec![-2.0, 0.5]);
        assert!(merge_split_solution(&[1.0, 2.0, 3.0]).is_err());
        assert!(merge_split_solution(&[-1.0, 0.0]).is_err());
    }

    #[test]
    fn split_columns_are_antiparallel() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let p = SensingProblem::new(a.clone(), vec![1.0, 0.0, -1.0], 0.2, Penalty::L1, SignMode::Free).unwrap();
        let s = split_problem(&p, None).unwrap();
        assert_eq!(s.n(), 4);
        assert_eq!(s.sign_mode(), SignMode::Nonneg);
        for k in 0..2 {
            let c = a.column(k);
            let inner = dot(&s.matrix().column(k), &s.matrix().column(k + 2));
            assert_eq!(inner, -dot(&c, &c));
        }
        let barrier = Penalty::LogBarrier { gamma: 10.0, lambda: 0.2 };
        assert_eq!(split_problem(&p, Some(barrier)).unwrap().penalty(), barrier);
        assert!(split_problem(&p.with_sign_mode(SignMode::Nonneg), None).is_err());
    }
}
