use nalgebra::DMatrix;

use super::{BoundaryGeometry, BoundarySite, GrowableMatrix};
use crate::error::BoundaryError;
use crate::geometry::BoundarySource;

const NONE: u32 = u32::MAX;

/// One equation `w_B − Σ coupled·w_B' = Σ known·w + datum_weight·datum`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRow {
    pub site: usize,
    /// `(unknown index, coefficient)` on other boundary displacements.
    pub coupled: Vec<(usize, f64)>,
    /// `(site, coefficient)` on interior displacements.
    pub known: Vec<(usize, f64)>,
    pub datum_weight: f64,
    pub source: BoundarySource,
}

impl BoundaryRow {
    fn new(b: &BoundarySite, unknown: &[u32]) -> Self {
        let mut coupled = Vec::new();
        let mut known = Vec::new();
        for (s, c) in b.site_coefficients() {
            match unknown[s] {
                NONE => known.push((s, c)),
                j => coupled.push((j as usize, c)),
            }
        }
        Self { site: b.site, coupled, known, datum_weight: b.datum_weight, source: b.source }
    }

    /// Sparse row of `S` with the diagonal at `own`.
    fn s_entries(&self, own: usize) -> Vec<(usize, f64)> {
        let mut e = vec![(own, 1.0)];
        for &(j, c) in &self.coupled {
            match e.iter_mut().find(|(k, _)| *k == j) {
                Some(x) => x.1 -= c,
                None => e.push((j, -c)),
            }
        }
        e
    }
}

/// Stencils added or rebuilt after crack growth.
#[derive(Debug, Clone, Default)]
pub struct BoundaryUpdate {
    pub added: Vec<BoundarySite>,
    pub rebuilt: Vec<BoundarySite>,
}

/// Dense system `S w_B = R(t)` over all boundary sites, kept as an explicit
/// inverse. Growth is absorbed with a low-rank update; the inverse is rebuilt
/// from scratch every `refresh_every` updates.
#[derive(Debug, Clone)]
pub struct BoundarySystem {
    sites: Vec<BoundarySite>,
    rows: Vec<BoundaryRow>,
    unknown: Vec<u32>,
    inverse: GrowableMatrix,
    updates_since_refresh: usize,
    pub refresh_every: usize,
}

impl BoundarySystem {
    pub fn assemble(sites: Vec<BoundarySite>, lattice_len: usize) -> Result<Self, BoundaryError> {
        let mut unknown = vec![NONE; lattice_len];
        for (i, b) in sites.iter().enumerate() {
            unknown[b.site] = i as u32;
        }
        let rows = sites.iter().map(|b| BoundaryRow::new(b, &unknown)).collect();
        let mut sys = Self {
            sites,
            rows,
            unknown,
            inverse: GrowableMatrix::identity(0),
            updates_since_refresh: 0,
            refresh_every: 64,
        };
        sys.refresh()?;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn sites(&self) -> &[BoundarySite] {
        &self.sites
    }

    pub fn rows(&self) -> &[BoundaryRow] {
        &self.rows
    }

    pub fn inverse(&self) -> &GrowableMatrix {
        &self.inverse
    }

    /// Row index of a lattice site, if it is a boundary unknown.
    pub fn unknown_index(&self, site: usize) -> Option<usize> {
        match self.unknown[site] {
            NONE => None,
            j => Some(j as usize),
        }
    }

    pub fn s_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut s = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r.s_entries(i) {
                s[(i, j)] += v;
            }
        }
        s
    }

    /// Recomputes `S⁻¹` from the rows. Rows without coupling are identity
    /// rows, so only the coupled block is factorized.
    pub fn refresh(&mut self) -> Result<(), BoundaryError> {
        let n = self.len();
        let coupled: Vec<usize> = (0..n).filter(|&i| !self.rows[i].coupled.is_empty()).collect();
        let mut pos = vec![NONE; n];
        for (p, &i) in coupled.iter().enumerate() {
            pos[i] = p as u32;
        }
        let m = coupled.len();
        let mut scc = DMatrix::<f64>::zeros(m, m);
        let mut scn: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (p, &i) in coupled.iter().enumerate() {
            for (j, v) in self.rows[i].s_entries(i) {
                match pos[j] {
                    NONE => scn[p].push((j, v)),
                    q => scc[(p, q as usize)] += v,
                }
            }
        }
        let singular = || BoundaryError::Singular { sites: coupled.iter().map(|&i| self.rows[i].site).collect() };
        let inv_cc = scc.lu().try_inverse().ok_or_else(singular)?;
        if inv_cc.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        let mut a = GrowableMatrix::identity(n);
        let mut block = DMatrix::<f64>::identity(n, n);
        for (p, &i) in coupled.iter().enumerate() {
            block[(i, i)] = 0.0;
            for (q, &j) in coupled.iter().enumerate() {
                block[(i, j)] = inv_cc[(p, q)];
            }
        }
        // A_CN = −S_CC⁻¹ S_CN
        for (k, entries) in scn.iter().enumerate() {
            for &(j, v) in entries {
                for (p, &i) in coupled.iter().enumerate() {
                    block[(i, j)] -= inv_cc[(p, k)] * v;
                }
            }
        }
        if m > 0 {
            a = GrowableMatrix::from_dmatrix(&block);
        }
        self.inverse = a;
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// Right-hand side `R(t)` from the predicted interior field.
    pub fn rhs(&self, geom: &BoundaryGeometry, t: f64, known: impl Fn(usize) -> f64) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.datum_weight * geom.datum(r.source, t) + r.known.iter().map(|&(s, c)| c * known(s)).sum::<f64>())
            .collect()
    }

    /// Boundary displacements, ordered like [`sites`](Self::sites).
    pub fn solve(&self, geom: &BoundaryGeometry, t: f64, known: impl Fn(usize) -> f64) -> Vec<f64> {
        self.inverse.matvec(&self.rhs(geom, t, known))
    }

    /// Adds new boundary sites and replaces rebuilt stencils, updating the
    /// inverse in place.
    pub fn extend(&mut self, update: BoundaryUpdate) -> Result<(), BoundaryError> {
        let n_old = self.len();
        let mut affected: Vec<usize> = Vec::new();
        for b in &update.rebuilt {
            let i = self.unknown_index(b.site).expect("rebuilt site is a boundary unknown");
            affected.push(i);
        }
        let mut is_new = vec![false; self.unknown.len()];
        for b in &update.added {
            assert_eq!(self.unknown[b.site], NONE, "site {} is already a boundary unknown", b.site);
            is_new[b.site] = true;
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.known.iter().any(|&(s, _)| is_new[s]) {
                affected.push(i);
            }
        }
        affected.sort_unstable();
        affected.dedup();
        let old: Vec<Vec<(usize, f64)>> = affected.iter().map(|&i| self.rows[i].s_entries(i)).collect();

        for b in update.added {
            self.unknown[b.site] = self.sites.len() as u32;
            self.sites.push(b);
        }
        for b in update.rebuilt {
            let i = self.unknown[b.site] as usize;
            self.sites[i] = b;
        }
        for &i in &affected {
            self.rows[i] = BoundaryRow::new(&self.sites[i], &self.unknown);
        }
        for i in n_old..self.sites.len() {
            let row = BoundaryRow::new(&self.sites[i], &self.unknown);
            self.rows.push(row);
        }
        self.inverse.grow_identity(self.len() - n_old);

        let mut changes = Vec::with_capacity(affected.len() + self.len() - n_old);
        for (&i, before) in affected.iter().zip(&old) {
            changes.push((i, row_difference(&self.rows[i].s_entries(i), before)));
        }
        for i in n_old..self.len() {
            changes.push((i, row_difference(&self.rows[i].s_entries(i), &[(i, 1.0)])));
        }
        changes.retain(|(_, d)| !d.is_empty());
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= self.refresh_every {
            return self.refresh();
        }
        self.inverse
            .woodbury_rows(&changes)
            .map_err(|rows| BoundaryError::Singular { sites: rows.iter().map(|&i| self.rows[i].site).collect() })
    }
}

fn row_difference(new: &[(usize, f64)], old: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = new.to_vec();
    for &(j, v) in old {
        match d.iter_mut().find(|(k, _)| *k == j) {
            Some(x) => x.1 -= v,
            None => d.push((j, -v)),
        }
    }
    d.retain(|&(_, v)| v != 0.0);
    d.sort_by_key(|&(j, _)| j);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundarySite;
    use crate::geometry::{BcKind, DomainOutline, EdgeCondition, Vec2};
    use crate::lattice::{LatticeSpec, LatticeState, MaterialParams};
    use crate::load::TimeFunction;
    use approx::assert_abs_diff_eq;

    fn setup(n: usize) -> (DomainOutline, LatticeState) {
        let dir = |v: f64| EdgeCondition::dirichlet(TimeFunction::Constant { value: v });
        let outline = DomainOutline::rectangle(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            dir(0.0),
            EdgeCondition::traction_free(),
            dir(1.0),
            EdgeCondition::traction_free(),
        )
        .unwrap();
        let m = MaterialParams::new(1.0, 1.0).unwrap();
        let dh = 1.0 / n as f64;
        let spec = LatticeSpec::new(n, n, dh, &m, 2.0, 1.0, Vec2::new(dh / 2.0, dh / 2.0)).unwrap();
        let st = LatticeState::new(spec, |p| outline.contains(p));
        (outline, st)
    }

    #[test]
    fn linear_profile_is_exact() {
        let (outline, st) = setup(10);
        let geom = BoundaryGeometry { outline: &outline, crack: None, mu: 1.0 };
        let sites: Vec<_> = st.boundary_sites().into_iter().map(|s| BoundarySite::build(s, &st, &geom).unwrap()).collect();
        let sys = BoundarySystem::assemble(sites, st.len()).unwrap();
        let exact = |s: usize| st.spec().position(s).y;
        let w = sys.solve(&geom, 0.0, exact);
        for (b, v) in sys.sites().iter().zip(&w) {
            assert_abs_diff_eq!(*v, exact(b.site), epsilon = 1e-12);
        }
        let s = sys.s_matrix();
        let prod = &s * sys.inverse().to_dmatrix();
        assert_abs_diff_eq!((prod - DMatrix::identity(sys.len(), sys.len())).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn extension_matches_reassembly() {
        let (outline, st) = setup(12);
        let geom = BoundaryGeometry { outline: &outline, crack: None, mu: 1.0 };
        let all: Vec<_> = st.boundary_sites().into_iter().map(|s| BoundarySite::build(s, &st, &geom).unwrap()).collect();
        let corner = |b: &BoundarySite| {
            let (i, j) = st.spec().coords(b.site);
            i.min(11 - i) + j.min(11 - j) < 3
        };
        let (late, early): (Vec<_>, Vec<_>) = all.iter().cloned().partition(corner);
        assert!(!late.is_empty());
        let mut sys = BoundarySystem::assemble(early, st.len()).unwrap();
        sys.extend(BoundaryUpdate { added: late, rebuilt: Vec::new() }).unwrap();
        let full = BoundarySystem::assemble(sys.sites().to_vec(), st.len()).unwrap();
        assert_eq!(sys.rows(), full.rows());
        let diff = sys.inverse().to_dmatrix() - full.inverse().to_dmatrix();
        assert!(diff.abs().max() < 1e-12);
        assert!(sys.sites().iter().any(|b| b.kind == BcKind::Neumann));
    }

    #[test]
    fn singular_system_names_sites() {
        let (outline, st) = setup(6);
        let geom = BoundaryGeometry { outline: &outline, crack: None, mu: 1.0 };
        let mut b = BoundarySite::build(st.spec().index(0, 2), &st, &geom).unwrap();
        let mut c = BoundarySite::build(st.spec().index(1, 2), &st, &geom).unwrap();
        // w_b = w_c and w_c = w_b
        b.samples = vec![crate::boundary::InterpolationCell { point: Vec2::new(0.0, 0.0), corners: vec![(c.site, 1.0)] }];
        b.sample_weights = vec![1.0];
        c.samples = vec![crate::boundary::InterpolationCell { point: Vec2::new(0.0, 0.0), corners: vec![(b.site, 1.0)] }];
        c.sample_weights = vec![1.0];
        let err = BoundarySystem::assemble(vec![b, c], st.len()).unwrap_err();
        assert!(matches!(err, BoundaryError::Singular { ref sites } if sites.len() == 2));
    }
}
