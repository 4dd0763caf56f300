//! The four measure spaces with their bounded windows `E₀` and index families.
//!
//! Grids are stored per axis. Flat indices are row-major over
//! [`Geometry::shape`]: index `i * n2 + j` refers to `(axis1[i], axis2[j])`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KarlinError, Result};

/// The fixed origin `o` of the spherical family: the north pole.
pub const NORTH_POLE: [f64; 3] = [0.0, 0.0, 1.0];

/// Which sets a spherical grid point `x` indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereIndex {
    /// Hemispheres `H_x = {y : ⟨x,y⟩ > 0}`; the rotationally stationary field.
    Hemisphere,
    /// `H_x Δ H_o`: the field pinned to vanish at the north pole.
    Pinned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// `E₀ = [0,1]`, `A_t = [0,t]`.
    HalfLine { grid: Vec<f64> },
    /// `E₀ = [0,1]²`, `A_t = [0,t₁]×[0,t₂]` over the lattice `t1 × t2`.
    Rectangle { t1: Vec<f64>, t2: Vec<f64> },
    /// `E₀ = S¹×[0,√2]`, `A_t = {(s,r) : 0 < r < ⟨s,t⟩}` over the lattice `xs × ys ⊂ [0,1]²`.
    Chentsov2D { xs: Vec<f64>, ys: Vec<f64> },
    /// `E₀ = S²` over the polar lattice `phis × thetas` (azimuth, colatitude).
    Sphere {
        phis: Vec<f64>,
        thetas: Vec<f64>,
        index: SphereIndex,
    },
}

/// A point of the window `E₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Line(f64),
    Plane([f64; 2]),
    /// A line `{x : ⟨x, (cos angle, sin angle)⟩ = radius}`.
    Polar { angle: f64, radius: f64 },
    Sphere([f64; 3]),
}

fn check_axis(name: &str, axis: &[f64], lo: f64, hi: f64, allow_ties: bool) -> Result<()> {
    if axis.is_empty() {
        return Err(KarlinError::InvalidGrid(format!("{name} is empty")));
    }
    if let Some(bad) = axis.iter().find(|v| !(**v >= lo && **v <= hi)) {
        return Err(KarlinError::InvalidGrid(format!("{name} value {bad} outside [{lo}, {hi}]")));
    }
    for w in axis.windows(2) {
        let ordered = if allow_ties { w[1] >= w[0] } else { w[1] > w[0] };
        if !ordered {
            return Err(KarlinError::InvalidGrid(format!(
                "{name} must be increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `n` equally spaced points from 0 to 1 inclusive (a single point is `1`).
pub fn linspace01(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Unit vector at azimuth `phi` and colatitude `theta`.
pub fn polar_to_unit(phi: f64, theta: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    if theta == 0.0 {
        return NORTH_POLE;
    }
    if theta == PI {
        return [0.0, 0.0, -1.0];
    }
    [st * cp, st * sp, ct]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Great-circle distance on the unit sphere.
pub fn geodesic_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    dot3(&cross, &cross).sqrt().atan2(dot3(a, b))
}

#[inline]
pub(crate) fn in_hemisphere(x: &[f64; 3], y: &[f64; 3]) -> bool {
    // ties on the great circle count as outside
    dot3(x, y) > 0.0
}

impl Geometry {
    pub fn half_line(grid: Vec<f64>) -> Result<Self> {
        // zero-width cells are an explicit edge case: allow ties
        check_axis("grid", &grid, 0.0, 1.0, true)?;
        Ok(Geometry::HalfLine { grid })
    }

    pub fn rectangle(t1: Vec<f64>, t2: Vec<f64>) -> Result<Self> {
        check_axis("t1", &t1, 0.0, 1.0, true)?;
        check_axis("t2", &t2, 0.0, 1.0, true)?;
        Ok(Geometry::Rectangle { t1, t2 })
    }

    pub fn chentsov(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_axis("xs", &xs, 0.0, 1.0, false)?;
        check_axis("ys", &ys, 0.0, 1.0, false)?;
        Ok(Geometry::Chentsov2D { xs, ys })
    }

    pub fn sphere(phis: Vec<f64>, thetas: Vec<f64>, index: SphereIndex) -> Result<Self> {
        check_axis("phis", &phis, 0.0, 2.0 * PI, false)?;
        check_axis("thetas", &thetas, 0.0, PI, false)?;
        Ok(Geometry::Sphere { phis, thetas, index })
    }

    /// Polar lattice with `n_phi` azimuths in `[0, 2π)` and `n_theta`
    /// colatitudes from the north pole to the south pole inclusive.
    pub fn sphere_lattice(n_phi: usize, n_theta: usize, index: SphereIndex) -> Result<Self> {
        if n_phi == 0 || n_theta < 2 {
            return Err(KarlinError::InvalidGrid("sphere lattice needs n_phi >= 1 and n_theta >= 2".into()));
        }
        let phis = (0..n_phi).map(|i| 2.0 * PI * i as f64 / n_phi as f64).collect();
        let thetas = (0..n_theta).map(|j| PI * j as f64 / (n_theta - 1) as f64).collect();
        Self::sphere(phis, thetas, index)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::HalfLine { .. } => "halfline",
            Geometry::Rectangle { .. } => "rectangle",
            Geometry::Chentsov2D { .. } => "chentsov2d",
            Geometry::Sphere { .. } => "sphere",
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            Geometry::HalfLine { grid } => vec![grid.len()],
            Geometry::Rectangle { t1, t2 } => vec![t1.len(), t2.len()],
            Geometry::Chentsov2D { xs, ys } => vec![xs.len(), ys.len()],
            Geometry::Sphere { phis, thetas, .. } => vec![phis.len(), thetas.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn split(&self, index: usize) -> (usize, usize) {
        let shape = self.shape();
        if shape.len() == 1 {
            (index, 0)
        } else {
            (index / shape[1], index % shape[1])
        }
    }

    /// The planar point of a Rectangle or Chentsov2D index.
    pub fn plane_point(&self, index: usize) -> Option<[f64; 2]> {
        let (i, j) = self.split(index);
        match self {
            Geometry::Rectangle { t1, t2 } => Some([t1[i], t2[j]]),
            Geometry::Chentsov2D { xs, ys } => Some([xs[i], ys[j]]),
            _ => None,
        }
    }

    /// The unit vector of a Sphere index.
    pub fn sphere_point(&self, index: usize) -> Option<[f64; 3]> {
        match self {
            Geometry::Sphere { phis, thetas, .. } => {
                let (i, j) = self.split(index);
                Some(polar_to_unit(phis[i], thetas[j]))
            }
            _ => None,
        }
    }

    /// Flat index of the north pole when it lies on a sphere grid.
    pub fn origin_index(&self) -> Option<usize> {
        match self {
            Geometry::Sphere { thetas, .. } if thetas[0] == 0.0 => Some(0),
            _ => None,
        }
    }

    /// The same lattice with a different spherical index family.
    pub fn with_sphere_index(&self, new_index: SphereIndex) -> Geometry {
        match self {
            Geometry::Sphere { phis, thetas, .. } => Geometry::Sphere {
                phis: phis.clone(),
                thetas: thetas.clone(),
                index: new_index,
            },
            other => other.clone(),
        }
    }

    /// `μ(E₀)`.
    pub fn mu_window(&self) -> f64 {
        match self {
            Geometry::HalfLine { .. } | Geometry::Rectangle { .. } => 1.0,
            Geometry::Chentsov2D { .. } => SQRT_2 * 2.0 * PI,
            Geometry::Sphere { .. } => 4.0 * PI,
        }
    }

    /// `μ(A_t)` for the set indexed by `index`.
    pub fn mu_index_set(&self, index: usize) -> f64 {
        let (i, j) = self.split(index);
        match self {
            Geometry::HalfLine { grid } => grid[i],
            Geometry::Rectangle { t1, t2 } => t1[i] * t2[j],
            // ∫_{S¹} ⟨s,t⟩₊ ds = 2‖t‖ with ds of total mass 2π
            Geometry::Chentsov2D { xs, ys } => 2.0 * xs[i].hypot(ys[j]),
            Geometry::Sphere { phis, thetas, index: mode } => match mode {
                SphereIndex::Hemisphere => 2.0 * PI,
                SphereIndex::Pinned => 4.0 * geodesic_distance(&polar_to_unit(phis[i], thetas[j]), &NORTH_POLE),
            },
        }
    }

    /// `μ(A_a Δ A_b)`.
    pub fn mu_symmetric_difference(&self, a: usize, b: usize) -> f64 {
        match self {
            Geometry::HalfLine { grid } => (grid[a] - grid[b]).abs(),
            Geometry::Rectangle { .. } => {
                let s = self.plane_point(a).unwrap();
                let t = self.plane_point(b).unwrap();
                let overlap = s[0].min(t[0]) * s[1].min(t[1]);
                (s[0] * s[1] + t[0] * t[1] - 2.0 * overlap).max(0.0)
            }
            // lines separating s and t: Crofton's formula
            Geometry::Chentsov2D { .. } => {
                let s = self.plane_point(a).unwrap();
                let t = self.plane_point(b).unwrap();
                2.0 * (s[0] - t[0]).hypot(s[1] - t[1])
            }
            // (H_x Δ H_o) Δ (H_y Δ H_o) = H_x Δ H_y in both modes
            Geometry::Sphere { .. } => {
                4.0 * geodesic_distance(&self.sphere_point(a).unwrap(), &self.sphere_point(b).unwrap())
            }
        }
    }

    /// A point distributed as `μ` restricted to `E₀`, normalized.
    pub fn sample_window_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Geometry::HalfLine { .. } => Point::Line(rng.random::<f64>()),
            Geometry::Rectangle { .. } => Point::Plane([rng.random::<f64>(), rng.random::<f64>()]),
            Geometry::Chentsov2D { .. } => Point::Polar {
                angle: 2.0 * PI * rng.random::<f64>(),
                radius: SQRT_2 * rng.random::<f64>(),
            },
            Geometry::Sphere { .. } => loop {
                let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                let norm = dot3(&g, &g).sqrt();
                if norm > 0.0 {
                    break Point::Sphere([g[0] / norm, g[1] / norm, g[2] / norm]);
                }
            },
        }
    }

    /// Whether `point` lies in the index set at `index`.
    ///
    /// Panics if the point variant does not belong to this geometry.
    pub fn point_in_index_set(&self, point: &Point, index: usize) -> bool {
        match (self, point) {
            (Geometry::HalfLine { grid }, Point::Line(u)) => *u <= grid[index],
            (Geometry::Rectangle { .. }, Point::Plane(u)) => {
                let t = self.plane_point(index).unwrap();
                u[0] <= t[0] && u[1] <= t[1]
            }
            (Geometry::Chentsov2D { .. }, Point::Polar { angle, radius }) => {
                let t = self.plane_point(index).unwrap();
                let (s2, s1) = angle.sin_cos();
                *radius < s1 * t[0] + s2 * t[1]
            }
            (Geometry::Sphere { index: mode, .. }, Point::Sphere(y)) => {
                let x = self.sphere_point(index).unwrap();
                match mode {
                    SphereIndex::Hemisphere => in_hemisphere(&x, y),
                    SphereIndex::Pinned => in_hemisphere(&x, y) != in_hemisphere(&NORTH_POLE, y),
                }
            }
            _ => panic!("point {point:?} does not belong to a {} geometry", self.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    fn all_geometries() -> Vec<Geometry> {
        vec![
            Geometry::half_line(vec![0.0, 0.2, 0.5, 1.0]).unwrap(),
            Geometry::rectangle(vec![0.3, 1.0], vec![0.0, 0.6]).unwrap(),
            Geometry::chentsov(vec![0.0, 0.4, 1.0], vec![0.0, 0.7]).unwrap(),
            Geometry::sphere(vec![0.0, 2.0], vec![0.0, 1.0, PI], SphereIndex::Pinned).unwrap(),
            Geometry::sphere(vec![0.5], vec![0.7, 2.5], SphereIndex::Hemisphere).unwrap(),
        ]
    }

    #[test]
    fn window_masses() {
        assert_eq!(Geometry::half_line(vec![1.0]).unwrap().mu_window(), 1.0);
        let c = Geometry::chentsov(vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(c.mu_window(), 8.885_765_876_316_732, max_relative = 1e-14);
        let s = Geometry::sphere_lattice(4, 3, SphereIndex::Pinned).unwrap();
        assert_relative_eq!(s.mu_window(), 4.0 * PI);
    }

    #[test]
    fn index_set_measures() {
        let h = Geometry::half_line(vec![0.0, 0.3]).unwrap();
        assert_eq!(h.mu_index_set(0), 0.0);
        assert_eq!(h.mu_index_set(1), 0.3);
        let r = Geometry::rectangle(vec![0.5], vec![0.2]).unwrap();
        assert_relative_eq!(r.mu_index_set(0), 0.1);
        let s = Geometry::sphere(vec![0.0], vec![0.0, PI / 2.0, PI], SphereIndex::Pinned).unwrap();
        assert_eq!(s.mu_index_set(0), 0.0);
        assert_relative_eq!(s.mu_index_set(1), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(s.mu_index_set(2), 4.0 * PI, max_relative = 1e-14);
        let hs = s.with_sphere_index(SphereIndex::Hemisphere);
        assert_relative_eq!(hs.mu_index_set(0), 2.0 * PI);
    }

    #[test]
    fn measures_bounded_by_window() {
        for g in all_geometries() {
            for i in 0..g.len() {
                assert!(g.mu_index_set(i) <= g.mu_window() + 1e-12);
                for j in 0..g.len() {
                    assert!(g.mu_symmetric_difference(i, j) >= 0.0);
                }
                assert_eq!(g.mu_symmetric_difference(i, i), 0.0);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let s = Geometry::sphere(vec![0.3], vec![0.4], SphereIndex::Pinned).unwrap();
        assert!(!s.point_in_index_set(&Point::Sphere(NORTH_POLE), 0));
        let c = Geometry::chentsov(vec![0.0], vec![0.0]).unwrap();
        let mut rng = RngStream::new(1, 1);
        for _ in 0..1000 {
            assert!(!c.point_in_index_set(&c.sample_window_point(&mut rng), 0));
        }
        let r = Geometry::rectangle(vec![0.5], vec![0.2]).unwrap();
        assert!(!r.point_in_index_set(&Point::Plane([0.3, 0.3]), 0));
        assert!(r.point_in_index_set(&Point::Plane([0.3, 0.1]), 0));
    }

    #[test]
    fn great_circle_ties_are_outside() {
        let s = Geometry::sphere(vec![0.0], vec![PI / 2.0], SphereIndex::Hemisphere).unwrap();
        // x = (1,0,0); y on the great circle ⟨x,y⟩ = 0
        assert!(!s.point_in_index_set(&Point::Sphere([0.0, 1.0, 0.0]), 0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Geometry::half_line(vec![0.5, 0.2]).is_err());
        assert!(Geometry::half_line(vec![1.5]).is_err());
        assert!(Geometry::half_line(vec![]).is_err());
        assert!(Geometry::chentsov(vec![0.2, 0.2], vec![0.1]).is_err());
        assert!(Geometry::sphere(vec![0.0], vec![4.0], SphereIndex::Pinned).is_err());
        assert!(Geometry::half_line(vec![0.2, 0.2, 0.5]).is_ok());
    }

    #[test]
    fn window_point_moments() {
        let n = 1_000_000;
        let mut rng = RngStream::new(99, 0);
        let h = Geometry::half_line(vec![1.0]).unwrap();
        let mean: f64 = (0..n)
            .map(|_| match h.sample_window_point(&mut rng) {
                Point::Line(u) => u,
                _ => unreachable!(),
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12.0 / n as f64).sqrt());

        let c = Geometry::chentsov(vec![1.0], vec![1.0]).unwrap();
        let mean_r: f64 = (0..n)
            .map(|_| match c.sample_window_point(&mut rng) {
                Point::Polar { radius, .. } => radius,
                _ => unreachable!(),
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean_r - SQRT_2 / 2.0).abs() < 3.0 * (2.0 / 12.0 / n as f64).sqrt());

        let s = Geometry::sphere_lattice(1, 2, SphereIndex::Pinned).unwrap();
        let mut acc = [0.0; 3];
        for _ in 0..n {
            if let Point::Sphere(y) = s.sample_window_point(&mut rng) {
                for k in 0..3 {
                    acc[k] += y[k];
                }
            }
        }
        // each coordinate of a uniform sphere point has variance 1/3
        for a in acc {
            assert!((a / n as f64).abs() < 3.0 * (1.0 / 3.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn monte_carlo_measure_consistency() {
        let n = 1_000_000;
        let mut rng = RngStream::new(2, 3);
        for g in all_geometries() {
            let points: Vec<Point> = (0..n).map(|_| g.sample_window_point(&mut rng)).collect();
            for idx in 0..g.len() {
                let hits = points.iter().filter(|p| g.point_in_index_set(p, idx)).count();
                let frac = hits as f64 / n as f64;
                let target = g.mu_index_set(idx) / g.mu_window();
                let se = (target * (1.0 - target) / n as f64).sqrt();
                assert!(
                    (frac - target).abs() <= 3.0 * se + 1e-12,
                    "{} idx {idx}: {frac} vs {target}",
                    g.name()
                );
                if target == 0.0 {
                    assert_eq!(hits, 0);
                }
            }
        }
    }

    #[test]
    fn symmetric_difference_monte_carlo() {
        let n = 400_000;
        let mut rng = RngStream::new(6, 0);
        for g in all_geometries() {
            let points: Vec<Point> = (0..n).map(|_| g.sample_window_point(&mut rng)).collect();
            for a in 0..g.len() {
                for b in (a + 1)..g.len() {
                    let hits = points
                        .iter()
                        .filter(|p| g.point_in_index_set(p, a) != g.point_in_index_set(p, b))
                        .count();
                    let frac = hits as f64 / n as f64;
                    let target = g.mu_symmetric_difference(a, b) / g.mu_window();
                    let se = (target * (1.0 - target) / n as f64).sqrt();
                    assert!((frac - target).abs() <= 3.5 * se + 1e-12, "{} ({a},{b})", g.name());
                }
            }
        }
    }

    #[test]
    fn geodesic_distance_examples() {
        let a = [1.0, 0.0, 0.0];
        assert_eq!(geodesic_distance(&a, &a), 0.0);
        assert_relative_eq!(geodesic_distance(&a, &[-1.0, 0.0, 0.0]), PI);
        assert_relative_eq!(geodesic_distance(&a, &[0.0, 1.0, 0.0]), PI / 2.0);
    }
}
