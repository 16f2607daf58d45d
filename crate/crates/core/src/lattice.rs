//! D2Q5 lattice Boltzmann kernel for the scalar wave equation
//! `ẅ = c_s² ∇²w` (antiplane shear).
//!
//! Each site carries five distributions `f^α` whose sum is the particle
//! velocity `ẇ`. One update is: equilibrium from `(w, ẇ)`, BGK relaxation and
//! streaming along intact links, and Euler integration of `w`. With the
//! default relaxation time `τ = Δt` the update is a pure transport of
//! equilibrium values and reproduces the explicit central scheme
//! `w⁺ − 2w + w⁻ = (c_s Δt)² ∇²ₕ w`, which is stable for `κ = c / c_s ≥ √2`.

use crate::error::LatticeError;
use crate::geometry::Vec2;

pub mod calibrate;

pub const Q: usize = 5;

/// Lattice velocities in units of `c`: rest, +x, +y, −x, −y.
pub const DIRECTIONS: [(i64, i64); Q] = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)];

pub const fn opposite(alpha: usize) -> usize {
    [0, 3, 4, 1, 2][alpha]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub mu: f64,
    pub rho: f64,
    cs: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, rho: f64) -> Result<Self, LatticeError> {
        if !(mu > 0.0 && mu.is_finite()) || !(rho > 0.0 && rho.is_finite()) {
            return Err(LatticeError::InvalidMaterial(format!("mu = {mu}, rho = {rho}")));
        }
        Ok(Self { mu, rho, cs: (mu / rho).sqrt() })
    }

    /// Shear wave speed `sqrt(mu / rho)`.
    pub fn cs(&self) -> f64 {
        self.cs
    }
}

/// Discretization of a rectangular block of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    pub dh: f64,
    pub dt: f64,
    /// Lattice speed `dh / dt`.
    pub c: f64,
    /// `c / c_s`.
    pub kappa: f64,
    pub cs: f64,
    /// Relaxation time in units of `dt`.
    pub tau: f64,
    /// `c_s² / (dt (tau − 1/2))`; equals `2 c_s² / dt` for the default `tau = 1`.
    pub lambda: f64,
    /// Position of site (0, 0).
    pub origin: Vec2,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl LatticeSpec {
    pub fn new(nx: usize, ny: usize, dh: f64, material: &MaterialParams, kappa: f64, tau: f64, origin: Vec2) -> Result<Self, LatticeError> {
        if nx == 0 || ny == 0 {
            return Err(LatticeError::InvalidSpec("empty lattice".into()));
        }
        if !(dh > 0.0 && dh.is_finite()) {
            return Err(LatticeError::InvalidSpec(format!("dh = {dh}")));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(LatticeError::InvalidSpec(format!("kappa = {kappa} must be >= 1")));
        }
        if !(tau > 0.5 && tau.is_finite()) {
            return Err(LatticeError::InvalidSpec(format!("tau = {tau} must exceed 1/2")));
        }
        let cs = material.cs();
        let c = kappa * cs;
        let dt = dh / c;
        let lambda = cs * cs / (dt * (tau - 0.5));
        Ok(Self { nx, ny, dh, dt, c, kappa, cs, tau, lambda, origin, periodic_x: false, periodic_y: false })
    }

    pub fn with_periodic(mut self, x: bool, y: bool) -> Self {
        self.periodic_x = x;
        self.periodic_y = y;
        self
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }

    pub fn position(&self, site: usize) -> Vec2 {
        let (i, j) = self.coords(site);
        self.origin + Vec2::new(i as f64 * self.dh, j as f64 * self.dh)
    }

    /// Site reached from `site` along `c^alpha`, if it exists.
    pub fn neighbor(&self, site: usize, alpha: usize) -> Option<usize> {
        let (i, j) = self.coords(site);
        let (di, dj) = DIRECTIONS[alpha];
        let wrap = |k: usize, d: i64, n: usize, periodic: bool| -> Option<usize> {
            let m = k as i64 + d;
            if (0..n as i64).contains(&m) {
                Some(m as usize)
            } else if periodic {
                Some(m.rem_euclid(n as i64) as usize)
            } else {
                None
            }
        };
        let ni = wrap(i, di, self.nx, self.periodic_x)?;
        let nj = wrap(j, dj, self.ny, self.periodic_y)?;
        Some(self.index(ni, nj))
    }

    /// Lattice coordinates of a point, snapped to integers within 1e-9.
    pub fn lattice_coords(&self, p: Vec2) -> (f64, f64) {
        let snap = |u: f64| {
            let r = u.round();
            if (u - r).abs() < 1e-9 {
                r
            } else {
                u
            }
        };
        let rel = p - self.origin;
        (snap(rel.x / self.dh), snap(rel.y / self.dh))
    }
}

/// Equilibrium distributions of the wave-equation scheme.
///
/// `f⁰ = ẇ − 2λw/c²` and `fᵏ = λw/(2c²)` for the four moving directions, so
/// that `Σ_α f_eq^α = ẇ`.
pub fn compute_equilibrium(w: f64, wdot: f64, spec: &LatticeSpec) -> [f64; Q] {
    let moving = spec.lambda * w / (2.0 * spec.c * spec.c);
    [wdot - 4.0 * moving, moving, moving, moving, moving]
}

pub fn macroscopic_velocity(f: &[f64; Q]) -> f64 {
    f.iter().sum()
}

pub fn integrate_displacement(w_prev: f64, wdot: f64, dt: f64) -> f64 {
    w_prev + dt * wdot
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteRole {
    Interior,
    Boundary,
    /// Outside the domain or without any intact link.
    Dead,
}

/// Full lattice state with double-buffered distributions.
#[derive(Debug, Clone)]
pub struct LatticeState {
    spec: LatticeSpec,
    f: Vec<[f64; Q]>,
    feq: Vec<[f64; Q]>,
    f_next: Vec<[f64; Q]>,
    w: Vec<f64>,
    wdot: Vec<f64>,
    /// Bit `alpha` set when the link toward `neighbor(alpha)` is intact.
    links: Vec<u8>,
    role: Vec<SiteRole>,
    /// Bit `alpha` set when slot `alpha` was not fed by the last streaming.
    missing: Vec<u8>,
}

impl LatticeState {
    /// Sites for which `live` holds are connected to every live neighbor.
    pub fn new(spec: LatticeSpec, live: impl Fn(Vec2) -> bool) -> Self {
        let n = spec.len();
        let alive: Vec<bool> = (0..n).map(|s| live(spec.position(s))).collect();
        let mut links = vec![0u8; n];
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for alpha in 1..Q {
                if let Some(nb) = spec.neighbor(s, alpha) {
                    if alive[nb] {
                        links[s] |= 1 << alpha;
                    }
                }
            }
        }
        let mut state = Self {
            f: vec![[0.0; Q]; n],
            feq: vec![[0.0; Q]; n],
            f_next: vec![[0.0; Q]; n],
            w: vec![0.0; n],
            wdot: vec![0.0; n],
            links,
            role: alive.iter().map(|&a| if a { SiteRole::Interior } else { SiteRole::Dead }).collect(),
            missing: vec![0; n],
            spec,
        };
        state.refresh_roles();
        state
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn wdot(&self) -> &[f64] {
        &self.wdot
    }

    pub fn wdot_mut(&mut self) -> &mut [f64] {
        &mut self.wdot
    }

    pub fn f(&self, site: usize) -> &[f64; Q] {
        &self.f[site]
    }

    pub fn f_mut(&mut self, site: usize) -> &mut [f64; Q] {
        &mut self.f[site]
    }

    pub fn feq(&self, site: usize) -> &[f64; Q] {
        &self.feq[site]
    }

    pub fn role(&self, site: usize) -> SiteRole {
        self.role[site]
    }

    pub fn missing(&self, site: usize) -> u8 {
        self.missing[site]
    }

    pub fn is_live(&self, site: usize) -> bool {
        self.role[site] != SiteRole::Dead
    }

    pub fn link_intact(&self, site: usize, alpha: usize) -> bool {
        self.links[site] & (1 << alpha) != 0
    }

    pub fn link_mask(&self, site: usize) -> u8 {
        self.links[site]
    }

    /// Sites reachable from `site` over intact links, in direction order.
    pub fn linked_neighbors(&self, site: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..Q).filter(move |&a| self.link_intact(site, a)).filter_map(move |a| self.spec.neighbor(site, a).map(|nb| (a, nb)))
    }

    /// Severs the link in both directions; returns false if it was already cut.
    pub fn sever_link(&mut self, site: usize, alpha: usize) -> bool {
        if !self.link_intact(site, alpha) {
            return false;
        }
        let nb = self.spec.neighbor(site, alpha).expect("intact link has a neighbor");
        self.links[site] &= !(1 << alpha);
        self.links[nb] &= !(1 << opposite(alpha));
        true
    }

    /// Classifies every site from its link mask.
    pub fn refresh_roles(&mut self) {
        for s in 0..self.len() {
            self.refresh_role(s);
        }
    }

    pub fn refresh_role(&mut self, site: usize) {
        if self.role[site] == SiteRole::Dead {
            return;
        }
        let full = 0b11110;
        self.role[site] = match self.links[site] {
            0 => SiteRole::Dead,
            m if m == full => SiteRole::Interior,
            _ => SiteRole::Boundary,
        };
        if self.role[site] == SiteRole::Dead {
            self.f[site] = [0.0; Q];
            self.w[site] = 0.0;
            self.wdot[site] = 0.0;
        }
    }

    pub fn boundary_sites(&self) -> Vec<usize> {
        (0..self.len()).filter(|&s| self.role[s] == SiteRole::Boundary).collect()
    }

    pub fn check_link_symmetry(&self) -> Result<(), LatticeError> {
        for s in 0..self.len() {
            for alpha in 1..Q {
                let here = self.link_intact(s, alpha);
                match self.spec.neighbor(s, alpha) {
                    Some(nb) => {
                        if here != self.link_intact(nb, opposite(alpha)) {
                            return Err(LatticeError::AsymmetricLink { site: s, alpha });
                        }
                    }
                    None if here => return Err(LatticeError::AsymmetricLink { site: s, alpha }),
                    None => {}
                }
            }
        }
        Ok(())
    }

    /// Sets every live site's distributions to equilibrium with its (w, ẇ).
    pub fn initialize_equilibrium(&mut self) {
        for s in 0..self.len() {
            if self.is_live(s) {
                self.f[s] = compute_equilibrium(self.w[s], self.wdot[s], &self.spec);
            }
        }
    }

    pub fn compute_equilibria(&mut self) {
        let spec = &self.spec;
        for s in 0..self.w.len() {
            self.feq[s] = if self.role[s] != SiteRole::Dead { compute_equilibrium(self.w[s], self.wdot[s], spec) } else { [0.0; Q] };
        }
    }

    /// Relaxes toward the stored equilibria and streams along intact links.
    ///
    /// Slots whose source link is severed or absent are zeroed and flagged in
    /// `missing`. An interior site with a flagged slot is an error.
    pub fn stream_collide(&mut self) -> Result<(), LatticeError> {
        let mut next = std::mem::take(&mut self.f_next);
        let mut missing = std::mem::take(&mut self.missing);
        stream_range(self, 0, &mut next, &mut missing);
        std::mem::swap(&mut self.f, &mut next);
        self.f_next = next;
        self.missing = missing;
        for s in 0..self.len() {
            if self.role[s] == SiteRole::Interior && self.missing[s] != 0 {
                let alpha = self.missing[s].trailing_zeros() as usize;
                return Err(LatticeError::MissingInteriorDistribution { site: s, alpha });
            }
        }
        Ok(())
    }

    /// Same as [`stream_collide`](Self::stream_collide) with the destination
    /// sites split into chunks updated on separate threads.
    #[cfg(feature = "parallel")]
    pub fn stream_collide_parallel(&mut self, chunk: usize) -> Result<(), LatticeError> {
        use rayon::prelude::*;
        let mut next = std::mem::take(&mut self.f_next);
        let mut missing = std::mem::take(&mut self.missing);
        {
            let this = &*self;
            next.par_chunks_mut(chunk).zip(missing.par_chunks_mut(chunk)).enumerate().for_each(|(k, (out, miss))| {
                stream_range(this, k * chunk, out, miss);
            });
        }
        std::mem::swap(&mut self.f, &mut next);
        self.f_next = next;
        self.missing = missing;
        for s in 0..self.len() {
            if self.role[s] == SiteRole::Interior && self.missing[s] != 0 {
                let alpha = self.missing[s].trailing_zeros() as usize;
                return Err(LatticeError::MissingInteriorDistribution { site: s, alpha });
            }
        }
        Ok(())
    }

    /// ẇ = Σ f for every interior site.
    pub fn update_interior_velocity(&mut self) {
        for s in 0..self.len() {
            if self.role[s] == SiteRole::Interior {
                self.wdot[s] = macroscopic_velocity(&self.f[s]);
            }
        }
    }

    pub fn integrate(&mut self) {
        let dt = self.spec.dt;
        for s in 0..self.len() {
            if self.role[s] != SiteRole::Dead {
                self.w[s] = integrate_displacement(self.w[s], self.wdot[s], dt);
            }
        }
    }

    /// One full update without any boundary treatment; for periodic or
    /// otherwise boundary-free lattices.
    pub fn advance_free(&mut self) -> Result<(), LatticeError> {
        self.compute_equilibria();
        self.stream_collide()?;
        self.update_interior_velocity();
        self.integrate();
        Ok(())
    }
}

/// Pull-streaming for destination sites `first .. first + out.len()`.
fn stream_range(state: &LatticeState, first: usize, out: &mut [[f64; Q]], missing: &mut [u8]) {
    let spec = &state.spec;
    let inv_tau = 1.0 / spec.tau;
    let pure_transport = spec.tau == 1.0;
    for (k, (dst, miss)) in out.iter_mut().zip(missing.iter_mut()).enumerate() {
        let s = first + k;
        *miss = 0;
        if state.role[s] == SiteRole::Dead {
            *dst = [0.0; Q];
            continue;
        }
        for alpha in 0..Q {
            let src = if alpha == 0 {
                Some(s)
            } else {
                let back = opposite(alpha);
                if state.link_intact(s, back) {
                    spec.neighbor(s, back)
                } else {
                    None
                }
            };
            match src {
                Some(p) => {
                    let feq = state.feq[p][alpha];
                    dst[alpha] = if pure_transport {
                        feq
                    } else {
                        let f = state.f[p][alpha];
                        f - inv_tau * (f - feq)
                    };
                }
                None => {
                    dst[alpha] = 0.0;
                    *miss |= 1 << alpha;
                }
            }
        }
    }
}
