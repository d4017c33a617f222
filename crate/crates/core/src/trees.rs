//! Closed forms on a single regular tree, and asymptotic shapes on DL(q,q).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::groups::{Element, GroupSpec, TreeVertex};
use crate::kernels::lumped::AnyLumping;
use crate::kernels::{standard_measure, MeasureKind};

/// Tree quantities for the lazy kernel on `T_l` at parameter `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreeClosedForm {
    pub l: u32,
    pub r: f64,
    /// `G(e, x | r) / G(e, e | r)` for a neighbour `x`.
    pub f: f64,
    pub gval: f64,
    pub rho: f64,
    pub beta: f64,
}

pub fn tree_beta(l: u32) -> f64 {
    ((l - 1) as f64).sqrt() / l as f64
}

pub fn tree_rho(l: u32) -> f64 {
    0.5 + tree_beta(l)
}

pub fn tree_closed_form(l: u32, r: f64) -> Result<TreeClosedForm> {
    if l < 3 {
        return invalid(format!("tree degree {l} must be at least 3"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("r = {r} must be positive"));
    }
    let beta = tree_beta(l);
    let rho = 0.5 + beta;
    let t = 1.0 / r - 0.5;
    let mut disc = t * t - beta * beta;
    if disc < 0.0 {
        // r = 1/rho lands here by rounding
        if disc > -1e-14 * beta * beta && t > 0.0 {
            disc = 0.0;
        } else {
            return invalid(format!("r = {r} exceeds 1/rho = {}", 1.0 / rho));
        }
    }
    let ll = l as f64;
    // t - sqrt(t^2 - beta^2) without cancellation
    let f = ll / (ll - 1.0) * beta * beta / (t + disc.sqrt());
    let gval = (1.0 / r) / (1.0 / r - 0.5 * (1.0 + f));
    Ok(TreeClosedForm {
        l,
        r,
        f,
        gval,
        rho,
        beta,
    })
}

pub fn tree_green(l: u32, r: f64, n: u32) -> Result<f64> {
    let c = tree_closed_form(l, r)?;
    Ok(c.gval * c.f.powi(n as i32))
}

/// Green function summed over the sphere of radius `n`; the sphere of
/// radius 0 is `{e}`.
pub fn tree_sphere_green_sum(l: u32, r: f64, n: u32) -> Result<f64> {
    let c = tree_closed_form(l, r)?;
    if n == 0 {
        return Ok(c.gval);
    }
    let ll = l as f64;
    // l (l-1)^{n-1} F^n, grouped to stay finite for large n
    Ok(ll / (ll - 1.0) * c.gval * ((ll - 1.0) * c.f).powi(n as i32))
}

/// Exponential growth rate of the tree sphere sums.
pub fn tree_omega(l: u32, r: f64) -> Result<f64> {
    let c = tree_closed_form(l, r)?;
    Ok(((l - 1) as f64).ln() + c.f.ln())
}

/// Class of a DL vertex pair: up-steps of the first coordinate, down-steps of
/// the second, and `s = u1 + u2 = d1 + d2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DLProfile {
    pub u1: u32,
    pub d2: u32,
    pub s: u32,
}

impl DLProfile {
    pub fn new(u1: u32, d2: u32, s: u32) -> Result<DLProfile> {
        if u1 > s || d2 > s {
            return invalid(format!("profile (u1={u1}, d2={d2}, s={s}) needs u1, d2 <= s"));
        }
        Ok(DLProfile { u1, d2, s })
    }

    pub fn of(x: &Element) -> Result<DLProfile> {
        match x {
            Element::Dl(a, b) => DLProfile::new(a.up, b.down.len() as u32, a.up + b.up),
            _ => invalid(format!("{x} is not a DL element")),
        }
    }

    /// `h(x_1) = d1 - u1`.
    pub fn height(&self) -> i64 {
        (self.s - self.d2) as i64 - self.u1 as i64
    }

    pub fn length(&self) -> u32 {
        2 * self.s - self.height().unsigned_abs() as u32
    }

    /// One vertex pair in the class.
    pub fn representative(&self) -> Element {
        let vertex = |u: u32, d: u32| {
            let mut down = vec![0u8; d as usize];
            if u > 0 && d > 0 {
                down[0] = 1;
            }
            TreeVertex { up: u, down }
        };
        Element::Dl(vertex(self.u1, self.s - self.d2), vertex(self.s - self.u1, self.d2))
    }
}

fn bracket(q: u32, p: &DLProfile) -> f64 {
    let (u, d, s) = (p.u1 as f64, p.d2 as f64, p.s as f64);
    let qq = q as f64;
    (qq + 1.0) / (qq - 1.0) * (u * (s - d) + (s - u) * d) + s * u * d + s * (s - u) * (s - d)
}

/// Green asymptotic shape on DL(q,q) for the simple random walk, without its
/// unknown constant: `s^-4 q^-s` times the bracket polynomial.
pub fn bw_green_shape(q: u32, p: &DLProfile) -> Result<f64> {
    if q < 2 {
        return invalid(format!("q={q} must be at least 2"));
    }
    if p.s == 0 {
        return invalid("shape undefined at s = 0");
    }
    let s = p.s as f64;
    Ok(bracket(q, p) / s.powi(4) * (q as f64).powf(-s))
}

/// `#class / q^s` in floating point (the count itself overflows quickly).
fn class_weight(q: u32, p: &DLProfile) -> f64 {
    let qq = q as f64;
    let tree = |u: u32, d: u32| match (u, d) {
        (0, _) => 1.0,
        (_, 0) => qq.powi(-(d as i32)),
        _ => (qq - 1.0) / qq,
    };
    tree(p.u1, p.s - p.d2) * tree(p.s - p.u1, p.d2)
}

/// Model sum over the sphere of radius `2n`, split by the sign of `h(x_1)`:
/// `[h > 0, h = 0, h < 0]`. Each class contributes its size times the shape.
pub fn lamplighter_h1_strata(q: u32, n: u32) -> Result<[f64; 3]> {
    if q < 2 {
        return invalid(format!("q={q} must be at least 2"));
    }
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let mut out = [0.0; 3];
    for s in n..=2 * n {
        for u1 in 0..=s {
            for d2 in 0..=s {
                let p = DLProfile { u1, d2, s };
                if p.length() != 2 * n {
                    continue;
                }
                let v = class_weight(q, &p) * bracket(q, &p) / (s as f64).powi(4);
                let slot = match p.height().signum() {
                    1 => 0,
                    0 => 1,
                    _ => 2,
                };
                out[slot] += v;
            }
        }
    }
    Ok(out)
}

pub fn lamplighter_h1_model(q: u32, n: u32) -> Result<f64> {
    Ok(lamplighter_h1_strata(q, n)?.iter().sum())
}

/// Ratio of the truncated-series Green function at `r = 1` to the shape, per
/// profile. Heuristic: the series converges slowly on DL and the shape is
/// only asymptotic.
pub fn bw_calibration(q: u32, profiles: &[DLProfile], order: usize) -> Result<Vec<(DLProfile, f64)>> {
    let m = standard_measure(&GroupSpec::DiestelLeader(q), MeasureKind::DlSrw)?;
    let lumping = AnyLumping::for_measure(&m).expect("DL walk is lumpable");
    let targets: Vec<Element> = profiles.iter().map(|p| p.representative()).collect();
    let (vals, _) = lumping.at_elements(1.0, &targets, order, 1e-15);
    profiles
        .iter()
        .zip(vals)
        .map(|(p, v)| Ok((*p, v[0] / bw_green_shape(q, p)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let c = tree_closed_form(4, 1.0).unwrap();
        assert!((c.f - 1.0 / 3.0).abs() < 1e-15 && (c.gval - 3.0).abs() < 1e-14);
        let c = tree_closed_form(6, 1.0).unwrap();
        assert!((c.f - 0.2).abs() < 1e-15);
        let rho = tree_rho(4);
        let c = tree_closed_form(4, 1.0 / rho).unwrap();
        assert!((c.f - 4.0 / 3.0 * c.beta).abs() < 1e-7);
        assert!(tree_closed_form(4, 1.0 / rho * 1.01).is_err());
        assert!(tree_closed_form(2, 1.0).is_err());
    }

    #[test]
    fn radical_identity() {
        for l in [3u32, 4, 6, 9] {
            for i in 1..=20 {
                let r = i as f64 / 20.0 / tree_rho(l);
                let c = tree_closed_form(l, r).unwrap();
                let t = 1.0 / r - 0.5;
                let lhs = t - (l - 1) as f64 * c.f / l as f64;
                assert!((lhs - (t * t - c.beta * c.beta).max(0.0).sqrt()).abs() < 1e-12);
                assert!(c.gval >= 1.0);
                if r >= 1.0 {
                    assert!(c.f > 0.0 && c.f <= 1.0);
                }
            }
        }
    }

    #[test]
    fn sphere_sums() {
        for n in [1, 2, 5, 10] {
            assert!((tree_sphere_green_sum(4, 1.0, n).unwrap() - 4.0).abs() < 1e-12);
        }
        assert!((tree_sphere_green_sum(4, 1.0, 0).unwrap() - 3.0).abs() < 1e-14);
        assert!((tree_green(4, 1.0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for l in [3, 4, 7] {
            assert!(tree_omega(l, 1.0).unwrap().abs() < 1e-14);
        }
        let w = tree_omega(5, 1.1).unwrap();
        let h = tree_sphere_green_sum(5, 1.1, 400).unwrap();
        assert!((h.ln() / 400.0 - w).abs() < 1e-2);
    }

    #[test]
    fn shape_values() {
        let p = DLProfile::new(0, 0, 1).unwrap();
        assert!((bw_green_shape(3, &p).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(bw_green_shape(3, &DLProfile { u1: 0, d2: 0, s: 0 }).is_err());
        // u1 = d2 = 0: bracket is s^3, so the shape is q^-s / s
        for s in 1..10 {
            let a = bw_green_shape(2, &DLProfile { u1: 0, d2: 0, s }).unwrap();
            let b = bw_green_shape(2, &DLProfile { u1: 0, d2: 0, s: s + 1 }).unwrap();
            assert!((b / a - s as f64 / (s + 1) as f64 / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_roundtrip() {
        let p = DLProfile::new(2, 1, 5).unwrap();
        let x = p.representative();
        assert_eq!(DLProfile::of(&x).unwrap(), p);
        assert_eq!(GroupSpec::DiestelLeader(3).word_length(&x), p.length());
        assert!(DLProfile::new(6, 0, 5).is_err());
    }

    #[test]
    fn model_strata() {
        for n in [1, 3, 10, 25] {
            let s = lamplighter_h1_strata(3, n).unwrap();
            assert!(s.iter().all(|v| *v > 0.0 && v.is_finite()));
            assert!((s[0] - s[2]).abs() < 1e-12 * s[0]);
        }
        let a = lamplighter_h1_model(3, 40).unwrap() / 40.0;
        let b = lamplighter_h1_model(3, 80).unwrap() / 80.0;
        assert!((a - b).abs() / a < 0.1, "{a} {b}");
    }

    #[test]
    fn calibration_is_roughly_profile_independent() {
        let mut profiles = Vec::new();
        for s in 6..=10u32 {
            for u1 in [s / 4, s / 2, 3 * s / 4] {
                profiles.push(DLProfile::new(u1, s / 2, s).unwrap());
            }
        }
        let c_hat = bw_calibration(3, &[DLProfile::new(4, 4, 8).unwrap()], 600).unwrap()[0].1;
        let cal = bw_calibration(3, &profiles, 600).unwrap();
        for (p, c) in &cal {
            assert!((c / c_hat - 1.0).abs() <= 0.25, "{p:?}: {c} against {c_hat}");
        }
    }
}
