//! Closed-form vertex counts on trees and on DL(q,q).

use crate::error::{invalid, Result};

/// Number of tree vertices reached from the root by `u` steps up then `d`
/// steps down without backtracking.
fn tree_class(q: u128, u: u32, d: u32) -> u128 {
    match (u, d) {
        (0, d) => q.pow(d),
        (_, 0) => 1,
        (_, d) => (q - 1) * q.pow(d - 1),
    }
}

/// Vertices of the (q+1)-regular tree at distance `n` from the root whose
/// horocycle level is `m`.
pub fn tree_level_sphere_count(q: u32, n: u32, m: i64) -> Result<u128> {
    if q < 2 {
        return invalid(format!("q={q} must be at least 2"));
    }
    if m.unsigned_abs() > n as u64 || (n as i64 - m) % 2 != 0 {
        return invalid(format!("level {m} incompatible with radius {n}"));
    }
    let k = ((n as i64 - m) / 2) as u32;
    Ok(tree_class(q as u128, k, n - k))
}

/// Size of the DL(q,q) class with `u1 = i`, `d2 = j` and `s = u1+u2 = d1+d2 = k`.
pub fn dl_class_count(q: u32, i: u32, j: u32, k: u32) -> Result<u128> {
    if q < 2 {
        return invalid(format!("q={q} must be at least 2"));
    }
    if i > k || j > k {
        return invalid(format!("class indices ({i},{j},{k}) need i,j <= k"));
    }
    let q = q as u128;
    Ok(tree_class(q, i, k - j) * tree_class(q, k - i, j))
}

/// Word length shared by the class `(i, j, k)`.
pub fn dl_class_length(i: u32, j: u32, k: u32) -> u32 {
    2 * k - (k as i64 - i as i64 - j as i64).unsigned_abs() as u32
}

/// Sphere size on DL(q,q): sum of class counts over all classes of length `n`
/// (the classes have `s` between `n/2` and `n`).
pub fn dl_sphere_count(q: u32, n: u32) -> u128 {
    let mut total = 0u128;
    for k in n.div_ceil(2)..=n {
        for i in 0..=k {
            for j in 0..=k {
                if dl_class_length(i, j, k) == n {
                    total += dl_class_count(q, i, j, k).expect("indices in range");
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_level_table() {
        assert_eq!(tree_level_sphere_count(3, 1, 1).unwrap(), 3);
        assert_eq!(tree_level_sphere_count(3, 2, 0).unwrap(), 2);
        assert_eq!(tree_level_sphere_count(3, 4, 2).unwrap(), 18);
        assert_eq!(tree_level_sphere_count(3, 4, -4).unwrap(), 1);
        assert!(tree_level_sphere_count(3, 4, 1).is_err());
        assert!(tree_level_sphere_count(3, 2, 4).is_err());
    }

    #[test]
    fn tree_levels_sum_to_sphere() {
        for q in 2..6u32 {
            for n in 1..12u32 {
                let s: u128 = (0..=n)
                    .map(|k| tree_level_sphere_count(q, n, n as i64 - 2 * k as i64).unwrap())
                    .sum();
                assert_eq!(s, (q as u128 + 1) * (q as u128).pow(n - 1));
            }
        }
    }

    #[test]
    fn class_counts() {
        assert_eq!(dl_class_count(3, 0, 0, 2).unwrap(), 9);
        assert_eq!(dl_class_count(3, 1, 1, 3).unwrap(), 12);
        // x1 = u^2 d^2 away from its root, x2 = the ancestor two levels up
        assert_eq!(dl_class_count(3, 2, 0, 2).unwrap(), 6);
        assert_eq!(dl_class_count(3, 0, 2, 2).unwrap(), 6);
        assert!(dl_class_count(3, 3, 0, 2).is_err());
        assert_eq!(dl_sphere_count(3, 0), 1);
        assert_eq!(dl_sphere_count(3, 1), 6);
        assert_eq!(dl_sphere_count(2, 1), 4);
    }
}
