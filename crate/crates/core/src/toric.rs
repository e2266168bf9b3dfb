//! Complete simplicial toric varieties from fans: moment polytopes with
//! exact rational vertices, slice-volume curves for toric valuations,
//! expected vanishing orders with a dual barycenter check, cone-linear log
//! discrepancies, and brute-force threshold searches over primitive lattice
//! directions.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::poly::{PiecewisePoly, Poly};
use crate::rat::Rat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToricModel {
    pub id: String,
    pub n: usize,
    /// Primitive integer ray generators.
    pub rays: Vec<Vec<i64>>,
    /// Maximal cones as ray-index sets; must be simplicial and cover R^n.
    pub max_cones: Vec<Vec<usize>>,
    /// Boundary coefficient b_rho per ray.
    pub boundary_b: Vec<Rat>,
    /// Default polarization as per-ray support values.
    pub default_omega: Option<Vector>,
}

/// Toric divisorial valuation t * v_u for a primitive direction u.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricValuation {
    pub u: Vec<i64>,
    pub t: Rat,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn is_primitive(u: &[i64]) -> bool {
    let g = u.iter().fold(0i64, |acc, &x| gcd(acc, x));
    g == 1
}

fn ray_rat(u: &[i64]) -> Vector {
    u.iter().map(|&x| Rat::from_int(x)).collect()
}

impl ToricModel {
    pub fn class_len(&self) -> usize {
        self.rays.len()
    }

    /// K_{X,B} as per-ray coefficients: b_rho - 1 on each invariant divisor.
    pub fn log_canonical_class(&self) -> Vector {
        self.boundary_b
            .iter()
            .map(|b| b - Rat::one())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::schema("toric model: dimension must be positive"));
        }
        if self.rays.is_empty() {
            return Err(Error::schema("toric model: no rays"));
        }
        if self.boundary_b.len() != self.rays.len() {
            return Err(Error::schema(
                "toric model: one boundary coefficient per ray required",
            ));
        }
        for (i, u) in self.rays.iter().enumerate() {
            if u.len() != self.n {
                return Err(Error::schema(format!("toric model: ray {i} has wrong dimension")));
            }
            if u.iter().all(|&x| x == 0) {
                return Err(Error::schema(format!("toric model: ray {i} is zero")));
            }
            if !is_primitive(u) {
                return Err(Error::schema(format!(
                    "toric model: ray {i} is not primitive"
                )));
            }
        }
        let mut seen_rays = BTreeSet::new();
        for u in &self.rays {
            if !seen_rays.insert(u.clone()) {
                return Err(Error::schema("toric model: duplicate ray"));
            }
        }
        let mut used = vec![false; self.rays.len()];
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if cone.len() != self.n {
                return Err(Error::schema(format!(
                    "toric model: max cone {ci} is not simplicial (needs exactly {} rays)",
                    self.n
                )));
            }
            for &r in cone {
                if r >= self.rays.len() {
                    return Err(Error::schema(format!(
                        "toric model: max cone {ci} references missing ray {r}"
                    )));
                }
                used[r] = true;
            }
            if self.cone_matrix(cone).map(|m| linalg::det(&m).is_zero()).unwrap_or(true) {
                return Err(Error::schema(format!(
                    "toric model: max cone {ci} is degenerate"
                )));
            }
        }
        if used.iter().any(|&u| !u) {
            return Err(Error::schema("toric model: ray not used by any max cone"));
        }
        // completeness: every facet of a max cone is shared by exactly two
        // max cones (a closed pure fan without boundary covers R^n)
        let mut facet_count: std::collections::BTreeMap<Vec<usize>, usize> =
            std::collections::BTreeMap::new();
        for cone in &self.max_cones {
            for drop in 0..cone.len() {
                let mut facet: Vec<usize> =
                    cone.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &r)| r).collect();
                facet.sort_unstable();
                *facet_count.entry(facet).or_insert(0) += 1;
            }
        }
        if self.n > 1 {
            for (facet, count) in facet_count {
                if count != 2 {
                    return Err(Error::schema(format!(
                        "toric model: fan is not complete; facet {facet:?} lies on {count} max cones"
                    )));
                }
            }
        } else if self.max_cones.len() != 2 {
            return Err(Error::schema(
                "toric model: a complete 1-dimensional fan has exactly two rays",
            ));
        }
        Ok(())
    }

    /// Columns are the cone's ray generators.
    fn cone_matrix(&self, cone: &[usize]) -> Option<Matrix> {
        let mut m = vec![vec![Rat::zero(); cone.len()]; self.n];
        for (j, &r) in cone.iter().enumerate() {
            for i in 0..self.n {
                m[i][j] = Rat::from_int(self.rays[r][i]);
            }
        }
        Some(m)
    }

    /// For each max cone, the linear form m_sigma of the support function
    /// of theta: <m_sigma, u_rho> = -theta_rho on the cone's rays.
    fn cone_linear_forms(&self, theta: &[Rat]) -> Result<Vec<Vector>> {
        if theta.len() != self.rays.len() {
            return Err(Error::domain("toric class has wrong coordinate length"));
        }
        let mut out = Vec::with_capacity(self.max_cones.len());
        for cone in &self.max_cones {
            // solve <m, u_rho> = -theta_rho for rho in cone
            let a: Matrix = cone.iter().map(|&r| ray_rat(&self.rays[r])).collect();
            let b: Vector = cone.iter().map(|&r| -&theta[r]).collect();
            let m = linalg::solve(&a, &b)
                .ok_or_else(|| Error::consistency("degenerate max cone escaped validation"))?;
            out.push(m);
        }
        Ok(out)
    }

    /// Strict convexity of the support function: each cone's linear form
    /// beats the support values strictly off its own cone.
    pub fn is_ample(&self, theta: &[Rat]) -> Result<bool> {
        let forms = self.cone_linear_forms(theta)?;
        for (cone, m) in self.max_cones.iter().zip(&forms) {
            for (r, u) in self.rays.iter().enumerate() {
                if cone.contains(&r) {
                    continue;
                }
                let v = linalg::dot(m, &ray_rat(u)) + &theta[r];
                if !v.is_positive() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn is_nef(&self, theta: &[Rat]) -> Result<bool> {
        let forms = self.cone_linear_forms(theta)?;
        for (cone, m) in self.max_cones.iter().zip(&forms) {
            for (r, u) in self.rays.iter().enumerate() {
                if cone.contains(&r) {
                    continue;
                }
                let v = linalg::dot(m, &ray_rat(u)) + &theta[r];
                if v.is_negative() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Moment polytope of an ample class, vertices indexed by max cones.
    pub fn polytope_of(&self, omega: &[Rat]) -> Result<Polytope> {
        if !self.is_ample(omega)? {
            return Err(Error::domain(
                "positivity error: class is not ample (support function not strictly convex)",
            ));
        }
        let forms = self.cone_linear_forms(omega)?;
        let mut vertices = forms;
        vertices.sort();
        vertices.dedup();
        if vertices.len() != self.max_cones.len() {
            return Err(Error::consistency(
                "ample class without a vertex/max-cone bijection",
            ));
        }
        let ineqs: Vec<(Vector, Rat)> = self
            .rays
            .iter()
            .zip(omega)
            .map(|(u, a)| (ray_rat(u), -a))
            .collect();
        let p = Polytope {
            n: self.n,
            ineqs,
            vertices,
        };
        // dual route: generic vertex enumeration must agree exactly
        let generic = enumerate_vertices(self.n, &p.ineqs);
        if generic != p.vertices {
            return Err(Error::consistency(
                "vertex enumeration disagrees with the cone-wise vertex solve",
            ));
        }
        Ok(p)
    }

    /// n! times the Euclidean volume of the moment polytope.
    pub fn volume(&self, omega: &[Rat]) -> Result<Rat> {
        let p = self.polytope_of(omega)?;
        Ok(p.normalized_volume())
    }

    /// Volume of omega + t*theta as an exact polynomial in t of degree <= n,
    /// valid on the whole line (it restricts a polynomial on Num).
    pub fn volume_polynomial(&self, omega: &[Rat], theta: &[Rat]) -> Result<Poly> {
        let t_max = self.ample_window(omega, theta)?;
        let h = &t_max / Rat::from_int(2 * (self.n as i64 + 1));
        let mut samples = Vec::with_capacity(self.n + 1);
        for j in 0..=self.n {
            let t = &h * Rat::from_int(j as i64);
            let class: Vector = omega
                .iter()
                .zip(theta)
                .map(|(a, b)| a + b * &t)
                .collect();
            samples.push((t, self.volume(&class)?));
        }
        let poly = Poly::interpolate(&samples);
        // verify at one more ample node
        let t = &h * Rat::from_int(self.n as i64 + 1);
        let class: Vector = omega
            .iter()
            .zip(theta)
            .map(|(a, b)| a + b * &t)
            .collect();
        if poly.eval(&t) != self.volume(&class)? {
            return Err(Error::consistency(
                "volume polynomial failed its verification sample",
            ));
        }
        Ok(poly)
    }

    /// Largest t0 > 0 with omega + t*theta ample for t in [0, t0), derived
    /// from the linear strict-convexity conditions. Errors when omega is
    /// not ample.
    pub(crate) fn ample_window(&self, omega: &[Rat], theta: &[Rat]) -> Result<Rat> {
        if !self.is_ample(omega)? {
            return Err(Error::domain("positivity error: base class is not ample"));
        }
        let fo = self.cone_linear_forms(omega)?;
        let ft = self.cone_linear_forms(theta)?;
        let mut bound: Option<Rat> = None;
        for ((cone, mo), mt) in self.max_cones.iter().zip(&fo).zip(&ft) {
            for (r, u) in self.rays.iter().enumerate() {
                if cone.contains(&r) {
                    continue;
                }
                let c0 = linalg::dot(mo, &ray_rat(u)) + &omega[r];
                let c1 = linalg::dot(mt, &ray_rat(u)) + &theta[r];
                if c1.is_negative() {
                    let limit = -c0 / c1;
                    bound = Some(match bound {
                        None => limit,
                        Some(b) => b.min(limit),
                    });
                }
            }
        }
        Ok(bound.unwrap_or_else(|| Rat::one()))
    }

    /// Trace n (omega^{n-1}.theta) / (omega^n) via the volume polynomial.
    pub fn trace(&self, omega: &[Rat], theta: &[Rat]) -> Result<Rat> {
        let p = self.volume_polynomial(omega, theta)?;
        let v = p.eval(&Rat::zero());
        Ok(p.derivative().eval(&Rat::zero()) / v)
    }

    /// sup-norm of theta against omega: the least s >= 0 with both
    /// s*omega - theta and s*omega + theta nef, from the linear nef
    /// conditions.
    pub fn norm_sup(&self, omega: &[Rat], theta: &[Rat]) -> Result<Rat> {
        if !self.is_ample(omega)? {
            return Err(Error::domain("positivity error: class is not ample"));
        }
        let fo = self.cone_linear_forms(omega)?;
        let ft = self.cone_linear_forms(theta)?;
        let mut bound = Rat::zero();
        for ((cone, mo), mt) in self.max_cones.iter().zip(&fo).zip(&ft) {
            for (r, u) in self.rays.iter().enumerate() {
                if cone.contains(&r) {
                    continue;
                }
                // s*c_omega + sign*c_theta >= 0 for both signs
                let c_omega = linalg::dot(mo, &ray_rat(u)) + &omega[r];
                let c_theta = linalg::dot(mt, &ray_rat(u)) + &theta[r];
                let need = c_theta.abs() / &c_omega;
                bound = bound.max(need);
            }
        }
        Ok(bound)
    }

    /// Extreme ratios (s_lo, s_hi) with s_lo*omega <= omega2 <= s_hi*omega
    /// in the nef order.
    pub fn thompson(&self, omega: &[Rat], omega2: &[Rat]) -> Result<(Rat, Rat)> {
        if !self.is_ample(omega)? || !self.is_ample(omega2)? {
            return Err(Error::domain("positivity error: class is not ample"));
        }
        let fo = self.cone_linear_forms(omega)?;
        let f2 = self.cone_linear_forms(omega2)?;
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for ((cone, mo), m2) in self.max_cones.iter().zip(&fo).zip(&f2) {
            for (r, u) in self.rays.iter().enumerate() {
                if cone.contains(&r) {
                    continue;
                }
                let c_omega = linalg::dot(mo, &ray_rat(u)) + &omega[r];
                let c_2 = linalg::dot(m2, &ray_rat(u)) + &omega2[r];
                let ratio = &c_2 / &c_omega;
                lo = Some(match lo {
                    None => ratio.clone(),
                    Some(b) => b.min(ratio.clone()),
                });
                hi = Some(match hi {
                    None => ratio,
                    Some(b) => b.max(ratio),
                });
            }
        }
        match (lo, hi) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            // a fan with every ray in every cone cannot occur for n >= 1
            _ => Err(Error::consistency("empty nef condition set")),
        }
    }

    /// Exact slice-volume curve: lambda -> n! Vol { m in P : <m,u> >=
    /// min_P <.,u> + lambda }, piecewise polynomial of degree <= n, zero at
    /// T = max - min. Breakpoints sit at vertex levels; each piece is
    /// interpolated from exact slice volumes and verified at an extra node.
    pub fn vol_slice_curve(&self, omega: &[Rat], u: &[i64]) -> Result<PiecewisePoly> {
        if u.iter().all(|&x| x == 0) {
            return Err(Error::domain("zero direction rejected"));
        }
        let p = self.polytope_of(omega)?;
        let u_rat = ray_rat(u);
        let mut levels: Vec<Rat> = p
            .vertices
            .iter()
            .map(|v| linalg::dot(v, &u_rat))
            .collect();
        levels.sort();
        levels.dedup();
        let min = levels.first().unwrap().clone();
        let breakpoints: Vec<Rat> = levels.iter().map(|l| l - &min).collect();
        let mut pieces = Vec::new();
        for w in breakpoints.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let len = b - a;
            let mut samples = Vec::with_capacity(self.n + 1);
            for k in 0..=self.n {
                // interior nodes only; endpoints belong to adjacent pieces
                let x = a + &len * Rat::new(k as i64 + 1, self.n as i64 + 3);
                let vol = p.slice_volume(&u_rat, &(&min + &x));
                samples.push((&x - a, vol));
            }
            let poly = Poly::interpolate(&samples);
            let x_check = a + &len * Rat::new(self.n as i64 + 2, self.n as i64 + 3);
            if poly.eval(&(&x_check - a)) != p.slice_volume(&u_rat, &(&min + &x_check)) {
                return Err(Error::consistency(
                    "slice-volume piece failed its verification sample",
                ));
            }
            pieces.push(poly);
        }
        PiecewisePoly::new(breakpoints, pieces, Rat::zero())
    }

    /// One slice volume n! Vol { m in P_omega : <m,u> >= min + lambda }.
    pub fn vol_slice(&self, omega: &[Rat], u: &[i64], lambda: &Rat) -> Result<Rat> {
        if u.iter().all(|&x| x == 0) {
            return Err(Error::domain("zero direction rejected"));
        }
        let p = self.polytope_of(omega)?;
        let u_rat = ray_rat(u);
        let min = p
            .vertices
            .iter()
            .map(|v| linalg::dot(v, &u_rat))
            .min()
            .unwrap();
        Ok(p.slice_volume(&u_rat, &(&min + lambda)))
    }

    /// Expected vanishing order of t*v_u: t * V^-1 * integral of the slice
    /// curve, cross-checked exactly against the barycenter formula
    /// t * (<bar(P), u> - min_P <.,u>).
    pub fn expected_order(&self, omega: &[Rat], val: &ToricValuation) -> Result<Rat> {
        if !is_primitive(&val.u) {
            return Err(Error::domain("toric valuation direction must be primitive"));
        }
        let p = self.polytope_of(omega)?;
        let v = p.normalized_volume();
        let curve = self.vol_slice_curve(omega, &val.u)?;
        let integral_route = curve.integrate_support()? / &v;
        let u_rat = ray_rat(&val.u);
        let bary = p.barycenter();
        let min = p
            .vertices
            .iter()
            .map(|w| linalg::dot(w, &u_rat))
            .min()
            .unwrap();
        let barycenter_route = linalg::dot(&bary, &u_rat) - min;
        if integral_route != barycenter_route {
            return Err(Error::consistency(format!(
                "expected vanishing order: integral route {integral_route} disagrees with \
                 barycenter route {barycenter_route}"
            )));
        }
        Ok(&val.t * integral_route)
    }

    /// Log discrepancy of t*v_u: t * sum c_i (1 - b_i) over the minimal
    /// cone decomposition u = sum c_i u_i.
    pub fn log_discrepancy(&self, val: &ToricValuation) -> Result<Rat> {
        let u_rat = ray_rat(&val.u);
        for cone in &self.max_cones {
            let a: Matrix = (0..self.n)
                .map(|i| cone.iter().map(|&r| Rat::from_int(self.rays[r][i])).collect())
                .collect();
            let c = match linalg::solve(&a, &u_rat) {
                Some(c) => c,
                None => continue,
            };
            if c.iter().all(|x| !x.is_negative()) {
                let mut acc = Rat::zero();
                for (&r, coef) in cone.iter().zip(&c) {
                    acc += coef * (Rat::one() - &self.boundary_b[r]);
                }
                return Ok(&val.t * acc);
            }
        }
        Err(Error::consistency(
            "complete fan contains no cone for the direction",
        ))
    }

    /// All primitive directions with sup-norm at most r, in the canonical
    /// candidate order (coordinates compared last-to-first by magnitude
    /// then sign, nonnegative first).
    pub fn primitive_directions(&self, r: i64) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = Vec::new();
        let mut current = vec![0i64; self.n];
        enumerate_box(&mut current, 0, r, &mut out);
        out.retain(|u| u.iter().any(|&x| x != 0) && is_primitive(u));
        out.sort_by_key(|u| candidate_key(u));
        out
    }
}

fn enumerate_box(current: &mut Vec<i64>, idx: usize, r: i64, out: &mut Vec<Vec<i64>>) {
    if idx == current.len() {
        out.push(current.clone());
        return;
    }
    for v in -r..=r {
        current[idx] = v;
        enumerate_box(current, idx + 1, r, out);
    }
}

/// Deterministic candidate order: last coordinate most significant, each
/// coordinate ranked 0, 1, -1, 2, -2, ...
pub fn candidate_key(u: &[i64]) -> Vec<(i64, bool)> {
    u.iter().rev().map(|&c| (c.abs(), c < 0)).collect()
}

/// Bounded rational polytope in inequality form { m : <m, normal> >= rhs }
/// with its exact vertex list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polytope {
    pub n: usize,
    pub ineqs: Vec<(Vector, Rat)>,
    pub vertices: Vec<Vector>,
}

impl Polytope {
    /// n! times the Euclidean volume, by star triangulation from the vertex
    /// centroid with a determinant per simplex (each simplex contributes
    /// |det| / n! to the Euclidean volume).
    pub fn normalized_volume(&self) -> Rat {
        self.triangulate()
            .iter()
            .map(|s| simplex_det(&s.0, &s.1))
            .sum()
    }

    /// Exact barycenter (volume-weighted average of simplex centroids).
    pub fn barycenter(&self) -> Vector {
        let simplices = self.triangulate();
        let mut total = Rat::zero();
        let mut acc = vec![Rat::zero(); self.n];
        let denom = Rat::from_int(self.n as i64 + 1);
        for (apex, base) in &simplices {
            let det = simplex_det(apex, base);
            if det.is_zero() {
                continue;
            }
            let mut centroid = apex.clone();
            for v in base {
                centroid = linalg::add(&centroid, v);
            }
            let centroid: Vector = centroid.iter().map(|x| x / &denom).collect();
            acc = linalg::add(&acc, &linalg::scale(&centroid, &det));
            total += det;
        }
        assert!(!total.is_zero(), "barycenter of a degenerate polytope");
        acc.iter().map(|x| x / &total).collect()
    }

    /// Star triangulation: (apex, n further vertices) per simplex, apex at
    /// the vertex centroid, facets triangulated recursively from their
    /// lexicographically least vertex.
    fn triangulate(&self) -> Vec<(Vector, Vec<Vector>)> {
        if self.vertices.len() < self.n + 1 || linalg::affine_dim(&self.vertices) < self.n {
            return vec![];
        }
        let count = Rat::from_int(self.vertices.len() as i64);
        let mut centroid = vec![Rat::zero(); self.n];
        for v in &self.vertices {
            centroid = linalg::add(&centroid, v);
        }
        let centroid: Vector = centroid.iter().map(|x| x / &count).collect();
        let mut out = Vec::new();
        for facet in self.facets() {
            for simplex in triangulate_face(&facet, self.n - 1) {
                out.push((centroid.clone(), simplex));
            }
        }
        out
    }

    /// Vertex sets tight on each inequality with affine dimension n-1,
    /// deduplicated.
    fn facets(&self) -> Vec<Vec<Vector>> {
        let mut seen: BTreeSet<Vec<Vector>> = BTreeSet::new();
        for (normal, rhs) in &self.ineqs {
            let mut tight: Vec<Vector> = self
                .vertices
                .iter()
                .filter(|v| &linalg::dot(v, normal) == rhs)
                .cloned()
                .collect();
            tight.sort();
            if tight.len() >= self.n && linalg::affine_dim(&tight) == self.n - 1 {
                seen.insert(tight);
            }
        }
        seen.into_iter().collect()
    }

    /// Volume of the upper level set { m in P : <m,u> >= c }.
    pub fn slice_volume(&self, u: &Vector, c: &Rat) -> Rat {
        let mut ineqs = self.ineqs.clone();
        ineqs.push((u.clone(), c.clone()));
        let vertices = enumerate_vertices(self.n, &ineqs);
        let sliced = Polytope {
            n: self.n,
            ineqs,
            vertices,
        };
        sliced.normalized_volume()
    }
}

/// |det of (base_i - apex)|.
fn simplex_det(apex: &Vector, base: &[Vector]) -> Rat {
    let m: Matrix = base.iter().map(|v| linalg::sub(v, apex)).collect();
    linalg::det(&m).abs()
}

/// Recursive face triangulation: cone a d-dimensional vertex set over the
/// triangulations of its sub-facets avoiding the least vertex. Vertices
/// must be sorted; returns (d+1)-element vertex lists.
fn triangulate_face(vertices: &[Vector], d: usize) -> Vec<Vec<Vector>> {
    if vertices.len() == d + 1 {
        return vec![vertices.to_vec()];
    }
    let anchor = &vertices[0];
    let mut out = Vec::new();
    for sub in sub_facets(vertices, d) {
        if sub.contains(anchor) {
            continue;
        }
        for mut simplex in triangulate_face(&sub, d - 1) {
            simplex.insert(0, anchor.clone());
            out.push(simplex);
        }
    }
    out
}

/// Facets of the convex hull of a d-dimensional point set, found by
/// supporting hyperplanes through d of the points.
fn sub_facets(vertices: &[Vector], d: usize) -> Vec<Vec<Vector>> {
    let n_amb = vertices[0].len();
    let mut seen: BTreeSet<Vec<Vector>> = BTreeSet::new();
    // all d-subsets span candidate supporting hyperplanes; keep those where
    // every other vertex lies weakly on one side and the tight set has
    // affine dimension d-1
    let idx: Vec<usize> = (0..vertices.len()).collect();
    for combo in combinations(&idx, d) {
        let subset: Vec<Vector> = combo.iter().map(|&i| vertices[i].clone()).collect();
        if linalg::affine_dim(&subset) != d - 1 {
            continue;
        }
        // find a normal within the affine span of `vertices` that vanishes
        // on subset differences: solve for h with <h, v_i - v_0> = 0 on the
        // subset and <h, w - v_0> = 1 for one off-subset witness w
        let base = &subset[0];
        let mut rows: Matrix = subset[1..].iter().map(|v| linalg::sub(v, base)).collect();
        let witness = vertices
            .iter()
            .find(|v| linalg::affine_dim(&{
                let mut s = subset.clone();
                s.push((*v).clone());
                s
            }) == d);
        let Some(witness) = witness else { continue };
        rows.push(linalg::sub(witness, base));
        let mut rhs = vec![Rat::zero(); rows.len()];
        *rhs.last_mut().unwrap() = Rat::one();
        // underdetermined in ambient space: restrict to the span of rows by
        // solving the normal equations exactly
        let Some(h) = solve_min_norm(&rows, &rhs, n_amb) else {
            continue;
        };
        let level = linalg::dot(base, &h);
        let mut tight: Vec<Vector> = Vec::new();
        let mut lower = false;
        let mut upper = false;
        for v in vertices {
            let val = linalg::dot(v, &h);
            if val == level {
                tight.push(v.clone());
            } else if val < level {
                lower = true;
            } else {
                upper = true;
            }
        }
        if lower && upper {
            continue; // not supporting
        }
        tight.sort();
        tight.dedup();
        if linalg::affine_dim(&tight) == d - 1 {
            seen.insert(tight);
        }
    }
    seen.into_iter().collect()
}

/// Least-norm exact solution of the underdetermined system rows * h = rhs,
/// via the normal equations h = rows^T y with (rows rows^T) y = rhs.
fn solve_min_norm(rows: &Matrix, rhs: &[Rat], n_amb: usize) -> Option<Vector> {
    let k = rows.len();
    let mut gram = vec![vec![Rat::zero(); k]; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = linalg::dot(&rows[i], &rows[j]);
        }
    }
    let y = linalg::solve(&gram, rhs)?;
    let mut h = vec![Rat::zero(); n_amb];
    for (row, yi) in rows.iter().zip(&y) {
        h = linalg::add(&h, &linalg::scale(row, yi));
    }
    Some(h)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = Vec::new();
    fn rec(items: &[usize], k: usize, start: usize, combo: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if combo.len() == k {
            out.push(combo.clone());
            return;
        }
        for i in start..items.len() {
            combo.push(items[i]);
            rec(items, k, i + 1, combo, out);
            combo.pop();
        }
    }
    rec(items, k, 0, &mut combo, &mut out);
    out
}

/// All vertices of { m : <m, normal_i> >= rhs_i }: solve every n-subset of
/// tight inequalities and keep the feasible solutions, sorted and deduped.
pub fn enumerate_vertices(n: usize, ineqs: &[(Vector, Rat)]) -> Vec<Vector> {
    let idx: Vec<usize> = (0..ineqs.len()).collect();
    let mut out: Vec<Vector> = Vec::new();
    for combo in combinations(&idx, n) {
        let a: Matrix = combo.iter().map(|&i| ineqs[i].0.clone()).collect();
        let b: Vector = combo.iter().map(|&i| ineqs[i].1.clone()).collect();
        let Some(m) = linalg::solve(&a, &b) else {
            continue;
        };
        if ineqs
            .iter()
            .all(|(normal, rhs)| &linalg::dot(&m, normal) >= rhs)
        {
            out.push(m);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Result row of a toric threshold search.
#[derive(Clone, Debug)]
pub struct ToricCandidate {
    pub u: Vec<i64>,
    pub log_discrepancy: Rat,
    pub norm: Rat,
}

/// Evaluate A and the Dirac energy for every primitive direction within the
/// search radius, in parallel, in the canonical candidate order.
pub fn candidate_sweep(model: &ToricModel, omega: &[Rat], radius: i64) -> Result<Vec<ToricCandidate>> {
    let dirs = model.primitive_directions(radius);
    let v = model.volume(omega)?;
    dirs.into_par_iter()
        .map(|u| {
            let val = ToricValuation {
                u: u.clone(),
                t: Rat::one(),
            };
            let a = model.log_discrepancy(&val)?;
            let curve = model.vol_slice_curve(omega, &u)?;
            let norm = curve.integrate_support()? / &v;
            Ok(ToricCandidate {
                u,
                log_discrepancy: a,
                norm,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    pub fn p2() -> ToricModel {
        ToricModel {
            id: "p2".into(),
            n: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            boundary_b: vec![ratio(0), ratio(0), ratio(0)],
            default_omega: Some(vec![ratio(1), ratio(1), ratio(1)]),
        }
    }

    pub fn p1() -> ToricModel {
        ToricModel {
            id: "p1t".into(),
            n: 1,
            rays: vec![vec![1], vec![-1]],
            max_cones: vec![vec![0], vec![1]],
            boundary_b: vec![ratio(0), ratio(0)],
            default_omega: Some(vec![ratio(2), ratio(2)]),
        }
    }

    fn anticanonical(m: &ToricModel) -> Vector {
        vec![ratio(1); m.rays.len()]
    }

    #[test]
    fn p2_validates() {
        p2().validate().unwrap();
        p1().validate().unwrap();
    }

    #[test]
    fn incomplete_fan_rejected() {
        let mut m = p2();
        m.max_cones.pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn non_primitive_ray_rejected() {
        let mut m = p2();
        m.rays[0] = vec![2, 0];
        assert!(m.validate().is_err());
    }

    #[test]
    fn anticanonical_triangle() {
        let m = p2();
        let p = m.polytope_of(&anticanonical(&m)).unwrap();
        let mut expected = vec![
            vec![ratio(-1), ratio(-1)],
            vec![ratio(2), ratio(-1)],
            vec![ratio(-1), ratio(2)],
        ];
        expected.sort();
        assert_eq!(p.vertices, expected);
        assert_eq!(p.normalized_volume(), ratio(9));
        assert_eq!(p.barycenter(), vec![ratio(0), ratio(0)]);
    }

    #[test]
    fn polytope_dilation() {
        let m = p2();
        let omega = anticanonical(&m);
        let doubled: Vector = omega.iter().map(|a| a * ratio(2)).collect();
        let p1 = m.polytope_of(&omega).unwrap();
        let p2_ = m.polytope_of(&doubled).unwrap();
        let scaled: Vec<Vector> = p1
            .vertices
            .iter()
            .map(|v| linalg::scale(v, &ratio(2)))
            .collect();
        assert_eq!(p2_.vertices, scaled);
        assert_eq!(p2_.normalized_volume(), ratio(4) * p1.normalized_volume());
    }

    #[test]
    fn segment_polytope() {
        let m = p1();
        let omega = vec![ratio(3), ratio(1)]; // segment [-3, 1], degree 4
        assert_eq!(m.volume(&omega).unwrap(), ratio(4));
    }

    #[test]
    fn ample_vs_nef() {
        let m = p2();
        assert!(m.is_ample(&anticanonical(&m)).unwrap());
        assert!(!m.is_ample(&vec![ratio(0), ratio(0), ratio(0)]).unwrap());
        // pullback-like degenerate support values: nef but not ample needs
        // a non-strictly-convex example; the zero class is nef
        assert!(m.is_nef(&vec![ratio(0), ratio(0), ratio(0)]).unwrap());
    }

    #[test]
    fn slice_curve_on_p2() {
        // omega = -K, u = (1,0): T = 3 and slice(lambda) = (3-lambda)^2
        let m = p2();
        let curve = m.vol_slice_curve(&anticanonical(&m), &[1, 0]).unwrap();
        assert_eq!(curve.last_breakpoint(), &ratio(3));
        assert_eq!(curve.eval(&ratio(0)).unwrap(), ratio(9));
        assert_eq!(curve.eval(&ratio(1)).unwrap(), ratio(4));
        assert_eq!(curve.eval(&ratio(3)).unwrap(), ratio(0));
        assert_eq!(curve.integrate_support().unwrap(), ratio(9));
        assert_eq!(curve.first_nonneg_root().unwrap(), Some(ratio(3)));
    }

    #[test]
    fn slice_additivity() {
        // upper + lower level sets partition the polytope volume
        let m = p2();
        let p = m.polytope_of(&anticanonical(&m)).unwrap();
        let u = vec![ratio(1), ratio(1)];
        let c = rat(1, 3);
        let upper = p.slice_volume(&u, &c);
        let neg_u = vec![ratio(-1), ratio(-1)];
        let lower = p.slice_volume(&neg_u, &-&c);
        assert_eq!(upper + lower, ratio(9));
    }

    #[test]
    fn expected_order_p2() {
        let m = p2();
        let omega = anticanonical(&m);
        let one = m
            .expected_order(
                &omega,
                &ToricValuation {
                    u: vec![1, 0],
                    t: ratio(1),
                },
            )
            .unwrap();
        assert_eq!(one, ratio(1));
        // homogeneity in t
        let five = m
            .expected_order(
                &omega,
                &ToricValuation {
                    u: vec![1, 0],
                    t: ratio(5),
                },
            )
            .unwrap();
        assert_eq!(five, ratio(5));
    }

    #[test]
    fn expected_order_p1() {
        // segment of length d: mean of the coordinate is d/2 above the min
        let m = p1();
        let omega = vec![ratio(3), ratio(1)];
        let h = m
            .expected_order(
                &omega,
                &ToricValuation {
                    u: vec![1],
                    t: ratio(1),
                },
            )
            .unwrap();
        assert_eq!(h, ratio(2));
    }

    #[test]
    fn log_discrepancy_examples() {
        let m = p2();
        let a = m
            .log_discrepancy(&ToricValuation {
                u: vec![1, 0],
                t: ratio(1),
            })
            .unwrap();
        assert_eq!(a, ratio(1));
        let a2 = m
            .log_discrepancy(&ToricValuation {
                u: vec![1, 1],
                t: ratio(1),
            })
            .unwrap();
        assert_eq!(a2, ratio(2));
        // cone linearity
        let a3 = m
            .log_discrepancy(&ToricValuation {
                u: vec![2, 1],
                t: ratio(1),
            })
            .unwrap();
        assert_eq!(a3, ratio(3));
    }

    #[test]
    fn trace_examples() {
        let m = p2();
        let omega = anticanonical(&m);
        // tr_omega(omega) = n
        assert_eq!(m.trace(&omega, &omega).unwrap(), ratio(2));
        // K = -3H on the plane, omega = -K: tr = -2
        let k = m.log_canonical_class();
        assert_eq!(m.trace(&omega, &k).unwrap(), ratio(-2));
    }

    #[test]
    fn norm_examples() {
        let m = p2();
        let omega = anticanonical(&m);
        assert_eq!(m.norm_sup(&omega, &omega).unwrap(), ratio(1));
        let k = m.log_canonical_class();
        assert_eq!(m.norm_sup(&omega, &k).unwrap(), ratio(1));
    }

    #[test]
    fn thompson_examples() {
        let m = p2();
        let omega = anticanonical(&m);
        assert_eq!(
            m.thompson(&omega, &omega).unwrap(),
            (ratio(1), ratio(1))
        );
        let doubled: Vector = omega.iter().map(|a| a * ratio(2)).collect();
        assert_eq!(
            m.thompson(&omega, &doubled).unwrap(),
            (ratio(2), ratio(2))
        );
    }

    #[test]
    fn candidate_order_starts_at_e1() {
        let m = p2();
        let dirs = m.primitive_directions(2);
        assert_eq!(dirs[0], vec![1, 0]);
        assert!(dirs.contains(&vec![-2, 1]));
        assert!(!dirs.contains(&vec![-2, 2]));
        assert!(!dirs.contains(&vec![0, 0]));
    }

    #[test]
    fn candidate_sweep_p2_all_ratio_one() {
        let m = p2();
        let rows = candidate_sweep(&m, &anticanonical(&m), 2).unwrap();
        for row in &rows {
            assert_eq!(row.log_discrepancy, row.norm);
        }
    }
}
