use crate::error::{ArmlError, Result};

/// Euclidean projection of `v` onto `{x >= 0, sum x = total}`.
///
/// Sort-based: find the threshold `tau` from the descending cumulative sums
/// and clamp `v - tau` at zero. `O(K log K)`. Points already on the simplex
/// (sum within `1e-12 * total`) come back unchanged, so projecting twice is
/// exactly a no-op.
pub fn project_simplex(v: &[f64], total: f64) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(ArmlError::arg("cannot project an empty vector"));
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(ArmlError::arg(format!("simplex total must be > 0, got {total}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ArmlError::arg("cannot project a non-finite vector"));
    }
    if v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - total).abs() <= 1e-12 * total {
        return Ok(v.to_vec());
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|x| (x - tau).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_point_is_fixed() {
        assert_eq!(project_simplex(&[1.0, 1.0], 2.0).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn clamps_negative_coordinate() {
        assert_eq!(project_simplex(&[3.0, -1.0], 2.0).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn single_vertex() {
        assert_eq!(project_simplex(&[-7.5], 1.0).unwrap(), vec![1.0]);
        assert_eq!(project_simplex(&[1e9], 1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn idempotent_exactly() {
        let p = project_simplex(&[0.3, 2.9, -0.4, 0.71], 4.0).unwrap();
        assert_eq!(project_simplex(&p, 4.0).unwrap(), p);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(project_simplex(&[1.0], 0.0).is_err());
        assert!(project_simplex(&[f64::INFINITY, 0.0], 2.0).is_err());
        assert!(project_simplex(&[], 1.0).is_err());
    }
}
