//! Global sheet selections and monodromy of Q-valued fields.

use crate::aq::{self, QPoint};
use crate::error::Result;
use crate::field::DiscreteQField;
use std::collections::{BTreeSet, VecDeque};

/// An edge where the labels carried along the spanning tree disagree with
/// the optimal matching.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchEdge {
    pub a: usize,
    pub b: usize,
    /// Sheet l (tree label) at a continues as sheet perm[l] at b.
    pub perm: Vec<usize>,
    /// Cycle lengths of `perm` longer than one, sorted.
    pub cycles: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Selection {
    /// Q single-valued fields; vertices outside the region keep their stored order.
    pub sheets: Vec<DiscreteQField>,
    /// labels[v][l] = storage slot carrying global sheet l at v.
    pub labels: Vec<Vec<usize>>,
    pub branch_edges: Vec<BranchEdge>,
}

impl Selection {
    pub fn is_global(&self) -> bool {
        self.branch_edges.is_empty()
    }
}

pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len > 1 {
            out.push(len);
        }
    }
    out.sort_unstable();
    out
}

/// Propagates edge matchings along a BFS tree of the vertices touched by
/// `cells` (all cells when None).
pub fn lipschitz_selection(u: &DiscreteQField, cells: Option<&[usize]>) -> Result<Selection> {
    let mesh = u.mesh().clone();
    let q = u.q();
    let all: Vec<usize>;
    let cells = match cells {
        Some(c) => c,
        None => {
            all = (0..mesh.num_cells()).collect();
            &all
        }
    };
    let mut inside = vec![false; mesh.num_vertices()];
    let mut region_edges = BTreeSet::new();
    for &c in cells {
        let cell = mesh.cell(c);
        for (i, &a) in cell.iter().enumerate() {
            inside[a] = true;
            for &b in &cell[i + 1..] {
                region_edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    let identity: Vec<usize> = (0..q).collect();
    let mut labels: Vec<Option<Vec<usize>>> = vec![None; mesh.num_vertices()];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for &(a, b) in &region_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for start in 0..mesh.num_vertices() {
        if !inside[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(identity.clone());
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            let la = labels[a].clone().unwrap();
            for &b in &adj[a] {
                if labels[b].is_none() {
                    let p = u.edge_perm(a, b);
                    labels[b] = Some(la.iter().map(|&s| p[s]).collect());
                    queue.push_back(b);
                }
            }
        }
    }
    let mut branch_edges = Vec::new();
    for &(a, b) in &region_edges {
        let (la, lb) = (labels[a].as_ref().unwrap(), labels[b].as_ref().unwrap());
        let (va, vb) = (u.value(a), u.value(b));
        let p = u.edge_perm(a, b);
        let opt: f64 = (0..q).map(|s| aq::dist_sq(va.sheet(s), vb.sheet(p[s]))).sum();
        let used: f64 = (0..q).map(|l| aq::dist_sq(va.sheet(la[l]), vb.sheet(lb[l]))).sum();
        if used - opt > 1e-12 * opt.max(1e-300) + aq::TAU_COIN * aq::TAU_COIN {
            // global label l at a is followed optimally into label perm[l] at b
            let inv_b = crate::field::invert(lb);
            let perm: Vec<usize> = (0..q).map(|l| inv_b[p[la[l]]]).collect();
            let cycles = cycle_lengths(&perm);
            branch_edges.push(BranchEdge { a, b, perm, cycles });
        }
    }
    let labels: Vec<Vec<usize>> = labels.into_iter().map(|l| l.unwrap_or_else(|| identity.clone())).collect();
    let mut sheets = Vec::with_capacity(q);
    for l in 0..q {
        let mut vals = Vec::with_capacity(mesh.num_vertices() * u.d());
        for (v, lab) in labels.iter().enumerate() {
            vals.extend_from_slice(u.sheet(v, lab[l]));
        }
        sheets.push(DiscreteQField::new(mesh.clone(), 1, u.d(), vals, u.is_normal())?);
    }
    Ok(Selection { sheets, labels, branch_edges })
}

/// Permutation picked up by following optimal matchings around a closed
/// vertex loop: sheet l at loop[0] returns as sheet result[l].
pub fn loop_holonomy(u: &DiscreteQField, lp: &[usize]) -> Vec<usize> {
    let q = u.q();
    let mut cur: Vec<usize> = (0..q).collect();
    if lp.len() < 2 {
        return cur;
    }
    let values: Vec<QPoint> = lp.iter().map(|&v| u.value(v)).collect();
    for i in 0..lp.len() {
        let (a, b) = (&values[i], &values[(i + 1) % lp.len()]);
        let (p, _) = aq::optimal_matching(a, b).expect("same shape");
        cur = cur.iter().map(|&s| p[s]).collect();
    }
    // coincident sheets at the base make the permutation ambiguous
    let base = &values[0];
    for l in 0..q {
        if aq::dist_sq(base.sheet(l), base.sheet(cur[l])).sqrt() <= aq::TAU_COIN {
            let k = cur[l];
            if let Some(j) = cur.iter().position(|&x| x == l) {
                cur[j] = k;
            }
            cur[l] = l;
        }
    }
    cur
}

/// Link of an interior vertex of a surface mesh, in cyclic order. None for
/// boundary vertices or non-surface meshes.
pub fn vertex_link(mesh: &crate::mesh::Mesh, v: usize) -> Option<Vec<usize>> {
    if mesh.m() != 2 || mesh.is_boundary(v) {
        return None;
    }
    let mut pairs: Vec<[usize; 2]> = mesh
        .vertex_cells(v)
        .iter()
        .map(|&c| {
            let o: Vec<usize> = mesh.cell(c).iter().copied().filter(|&x| x != v).collect();
            [o[0], o[1]]
        })
        .collect();
    let mut out = vec![pairs[0][0], pairs[0][1]];
    pairs.swap_remove(0);
    while !pairs.is_empty() {
        let last = *out.last().unwrap();
        let i = pairs.iter().position(|p| p[0] == last || p[1] == last)?;
        let p = pairs.swap_remove(i);
        let next = if p[0] == last { p[1] } else { p[0] };
        if pairs.is_empty() {
            if next != out[0] {
                return None;
            }
        } else {
            out.push(next);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::scene::Scene;
    use std::sync::Arc;

    fn disk() -> Arc<Mesh> {
        Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.05).unwrap())
    }

    fn sqrt_field(mesh: Arc<Mesh>) -> DiscreteQField {
        DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| {
            let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
            let (c, s) = (r.sqrt() * (th / 2.0).cos(), r.sqrt() * (th / 2.0).sin());
            vec![vec![c, s], vec![-c, -s]]
        })
        .unwrap()
    }

    #[test]
    fn separated_sheets_select_globally() {
        let mesh = disk();
        let u = DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| vec![vec![x[0], 1.0], vec![x[1], -1.0]]).unwrap();
        let s = lipschitz_selection(&u, None).unwrap();
        assert!(s.is_global());
        for v in 0..u.mesh().num_vertices() {
            let got = QPoint::from_sheets(&[s.sheets[0].sheet(v, 0), s.sheets[1].sheet(v, 0)]).unwrap();
            assert_eq!(got, u.value(v));
        }
        // a sheet is the one whose second coordinate is +1 everywhere
        let first = s.sheets[0].sheet(0, 0)[3];
        assert!((0..u.mesh().num_vertices()).all(|v| s.sheets[0].sheet(v, 0)[3] == first));
    }

    #[test]
    fn square_root_annulus_has_two_cycle() {
        let mesh = disk();
        let cells: Vec<usize> = (0..mesh.num_cells())
            .filter(|&c| {
                let x = &mesh.geom(c).center;
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                r > 0.3 && r < 0.9
            })
            .collect();
        let u = sqrt_field(mesh);
        let s = lipschitz_selection(&u, Some(&cells)).unwrap();
        assert!(!s.is_global());
        assert!(s.branch_edges.iter().all(|e| e.cycles == vec![2]));
    }

    #[test]
    fn constant_collapsed_field() {
        let u = DiscreteQField::from_normal_coefficients(disk(), 3, |_, _| vec![vec![0.5, -1.0]; 3]).unwrap();
        let s = lipschitz_selection(&u, None).unwrap();
        assert!(s.is_global());
        assert_eq!(s.sheets.len(), 3);
        for f in &s.sheets {
            assert!(f.values().chunks(4).all(|c| c == [0.0, 0.0, 0.5, -1.0]));
        }
    }

    #[test]
    fn holonomy_around_origin() {
        let mesh = disk();
        let u = sqrt_field(mesh.clone());
        let ring: Vec<usize> = {
            let mut vs: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| (mesh.radius(v) - 0.5).abs() < 0.02).collect();
            vs.sort_by(|&a, &b| {
                let (pa, pb) = (mesh.point(a), mesh.point(b));
                pa[1].atan2(pa[0]).total_cmp(&pb[1].atan2(pb[0]))
            });
            vs
        };
        assert!(ring.len() > 20);
        assert_eq!(loop_holonomy(&u, &ring), vec![1, 0]);
        let o = mesh.pole_vertex();
        let link = vertex_link(&mesh, o).unwrap();
        assert_eq!(link.len(), 6);
        let off = mesh.neighbors(o)[0];
        let far = *mesh.neighbors(off).iter().find(|&&x| x != o && !mesh.neighbors(o).contains(&x)).unwrap();
        let link = vertex_link(&mesh, far).unwrap();
        assert_eq!(loop_holonomy(&u, &link), vec![0, 1]);
    }

    #[test]
    fn cycle_lengths_sorted() {
        assert_eq!(cycle_lengths(&[1, 2, 0, 4, 3, 5]), vec![2, 3]);
        assert!(cycle_lengths(&[0, 1]).is_empty());
    }
}
