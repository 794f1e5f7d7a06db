//! Canonical labeling of layered graphs.
//!
//! Nodes are split into layers and colored edges only join neighboring
//! layers; nodes may be permuted within their layer but never moved across
//! layers, and some layers may be pinned entirely. The labeling is found by
//! individualization and refinement: ordered cell partitions per layer are
//! refined until every node in a cell has the same multiset of (neighbor
//! cell, edge color) pairs, a node of the first non-singleton cell is split
//! off, and the search continues until all cells are singletons. Each such
//! leaf orders every layer; the leaf whose relabeled graph is
//! lexicographically smallest wins. Automorphisms found along the way prune
//! equivalent branches.

use std::cmp::Ordering;

/// Graph on node layers `0..L`; `links[l]` holds the edge colors (0 for no
/// edge) between layers `l` and `l + 1` as a `widths[l + 1] x widths[l]`
/// row-major matrix with rows in layer `l + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layered {
    pub widths: Vec<usize>,
    pub links: Vec<Vec<u16>>,
}

impl Layered {
    pub fn edge(&self, l: usize, upper: usize, lower: usize) -> u16 {
        self.links[l][upper * self.widths[l] + lower]
    }

    /// Graph whose node `k` of layer `l` is node `order[l][k]` of `self`.
    pub fn relabel(&self, order: &[Vec<usize>]) -> Self {
        Self {
            widths: self.widths.clone(),
            links: self.cells_in(order),
        }
    }

    fn cells_in(&self, order: &[Vec<usize>]) -> Vec<Vec<u16>> {
        (0..self.links.len())
            .map(|l| {
                let mut out = Vec::with_capacity(self.links[l].len());
                for &u in &order[l + 1] {
                    for &v in &order[l] {
                        out.push(self.edge(l, u, v));
                    }
                }
                out
            })
            .collect()
    }

    fn certificate(&self, order: &[Vec<usize>]) -> Vec<u16> {
        self.cells_in(order).concat()
    }
}

#[derive(Debug, Clone)]
struct Partition {
    cells: Vec<Vec<Vec<usize>>>,
}

impl Partition {
    /// One cell per free layer; pinned layers get a singleton per node.
    fn initial(widths: &[usize], pinned: &[bool]) -> Self {
        Self {
            cells: widths
                .iter()
                .zip(pinned)
                .map(|(&w, &pin)| {
                    if pin {
                        (0..w).map(|v| vec![v]).collect()
                    } else {
                        vec![(0..w).collect()]
                    }
                })
                .collect(),
        }
    }

    fn cell_index(&self, l: usize, width: usize) -> Vec<usize> {
        let mut idx = vec![0; width];
        for (i, cell) in self.cells[l].iter().enumerate() {
            for &v in cell {
                idx[v] = i;
            }
        }
        idx
    }

    fn target(&self) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .find_map(|(l, cells)| cells.iter().position(|c| c.len() > 1).map(|i| (l, i)))
    }

    fn order(&self) -> Vec<Vec<usize>> {
        self.cells.iter().map(|cells| cells.concat()).collect()
    }

    fn individualize(&self, l: usize, cell: usize, v: usize) -> Self {
        let mut p = self.clone();
        let rest: Vec<usize> = p.cells[l][cell].iter().copied().filter(|&u| u != v).collect();
        p.cells[l][cell] = vec![v];
        p.cells[l].insert(cell + 1, rest);
        p
    }

    fn refine(&mut self, g: &Layered) {
        let layers = g.widths.len();
        loop {
            let mut changed = false;
            for l in 0..layers {
                let below = (l > 0).then(|| self.cell_index(l - 1, g.widths[l - 1]));
                let above = (l + 1 < layers).then(|| self.cell_index(l + 1, g.widths[l + 1]));
                let nb = if l > 0 { self.cells[l - 1].len() } else { 0 };
                let mut next = Vec::with_capacity(self.cells[l].len());
                for cell in &self.cells[l] {
                    if cell.len() == 1 {
                        next.push(cell.clone());
                        continue;
                    }
                    let mut keyed: Vec<(Vec<(usize, u16)>, usize)> = cell
                        .iter()
                        .map(|&v| {
                            let mut sig = Vec::new();
                            if let Some(below) = &below {
                                for (u, &c) in below.iter().enumerate() {
                                    let e = g.edge(l - 1, v, u);
                                    if e != 0 {
                                        sig.push((c, e));
                                    }
                                }
                            }
                            if let Some(above) = &above {
                                for (u, &c) in above.iter().enumerate() {
                                    let e = g.edge(l, u, v);
                                    if e != 0 {
                                        sig.push((nb + c, e));
                                    }
                                }
                            }
                            sig.sort_unstable();
                            (sig, v)
                        })
                        .collect();
                    keyed.sort_unstable();
                    let before = next.len();
                    let mut start = 0;
                    for i in 1..=keyed.len() {
                        if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                            next.push(keyed[start..i].iter().map(|k| k.1).collect());
                            start = i;
                        }
                    }
                    changed |= next.len() - before > 1;
                }
                self.cells[l] = next;
            }
            if !changed {
                return;
            }
        }
    }
}

struct Leaf {
    order: Vec<Vec<usize>>,
    cert: Vec<u16>,
}

enum Step {
    Continue,
    Jump(usize),
}

struct Search<'a> {
    g: &'a Layered,
    offsets: Vec<usize>,
    first: Option<(Leaf, Vec<(usize, usize)>)>,
    best: Option<Leaf>,
    /// Automorphisms as per-layer maps `node -> image`.
    automorphisms: Vec<Vec<Vec<usize>>>,
}

impl Search<'_> {
    fn automorphism(from: &[Vec<usize>], to: &[Vec<usize>]) -> Vec<Vec<usize>> {
        from.iter()
            .zip(to)
            .map(|(f, t)| {
                let mut map = vec![0; f.len()];
                for (&a, &b) in f.iter().zip(t) {
                    map[a] = b;
                }
                map
            })
            .collect()
    }

    fn leaf(&mut self, p: &Partition, prefix: &[(usize, usize)]) -> Step {
        let order = p.order();
        let cert = self.g.certificate(&order);
        let Some((first, first_path)) = &self.first else {
            let leaf = Leaf { order, cert };
            self.best = Some(Leaf {
                order: leaf.order.clone(),
                cert: leaf.cert.clone(),
            });
            self.first = Some((leaf, prefix.to_vec()));
            return Step::Continue;
        };
        if cert == first.cert {
            let aut = Self::automorphism(&order, &first.order);
            let level = prefix.iter().zip(first_path).take_while(|(a, b)| a == b).count();
            self.automorphisms.push(aut);
            return Step::Jump(level);
        }
        let best = self.best.as_ref().expect("set with first leaf");
        match cert.cmp(&best.cert) {
            Ordering::Equal => {
                let aut = Self::automorphism(&order, &best.order);
                self.automorphisms.push(aut);
            }
            Ordering::Less => self.best = Some(Leaf { order, cert }),
            Ordering::Greater => {}
        }
        Step::Continue
    }

    /// Whether `v` shares an orbit with any of `done` under the automorphisms
    /// that fix every node of `prefix`.
    fn same_orbit(&self, prefix: &[(usize, usize)], layer: usize, v: usize, done: &[usize]) -> bool {
        let total = *self.offsets.last().expect("nonempty");
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for aut in &self.automorphisms {
            if prefix.iter().any(|&(l, u)| aut[l][u] != u) {
                continue;
            }
            for (l, map) in aut.iter().enumerate() {
                for (a, &b) in map.iter().enumerate() {
                    let ra = find(&mut parent, self.offsets[l] + a);
                    let rb = find(&mut parent, self.offsets[l] + b);
                    parent[ra] = rb;
                }
            }
        }
        let root = find(&mut parent, self.offsets[layer] + v);
        done.iter().any(|&u| find(&mut parent, self.offsets[layer] + u) == root)
    }

    fn explore(&mut self, p: Partition, prefix: &mut Vec<(usize, usize)>) -> Step {
        let Some((layer, cell)) = p.target() else {
            return self.leaf(&p, prefix);
        };
        let depth = prefix.len();
        let members = p.cells[layer][cell].clone();
        let mut done = Vec::new();
        for v in members {
            let on_first_path = match &self.first {
                Some((_, path)) => path.len() > depth && path[..depth] == prefix[..],
                None => false,
            };
            if on_first_path && !done.is_empty() && self.same_orbit(prefix, layer, v, &done) {
                continue;
            }
            let mut child = p.individualize(layer, cell, v);
            child.refine(self.g);
            prefix.push((layer, v));
            let step = self.explore(child, prefix);
            prefix.pop();
            done.push(v);
            if let Step::Jump(level) = step {
                if level < depth {
                    return step;
                }
            }
        }
        Step::Continue
    }
}

/// Canonical order of every layer: `order[l][k]` is the node of layer `l`
/// placed at position `k`. Pinned layers keep their order. Inputs that differ
/// only by permutations of free layers yield identical relabeled graphs.
pub(crate) fn canonical_order(g: &Layered, pinned: &[bool]) -> Vec<Vec<usize>> {
    let mut offsets = vec![0];
    for &w in &g.widths {
        offsets.push(offsets.last().unwrap() + w);
    }
    let mut search = Search {
        g,
        offsets,
        first: None,
        best: None,
        automorphisms: Vec::new(),
    };
    let mut root = Partition::initial(&g.widths, pinned);
    root.refine(g);
    search.explore(root, &mut Vec::new());
    search.best.expect("search reaches at least one leaf").order
}
