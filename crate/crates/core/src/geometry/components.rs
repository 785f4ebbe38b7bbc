use super::{PointSet, SpatialIndex};

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }

    /// Size of the set whose root is `root`.
    pub fn size_of(&self, root: usize) -> usize {
        self.size[root]
    }

    /// Groups with ascending members, ordered by smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

fn components(phi: &PointSet, r: f64, strict: bool) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(phi.len());
    if r >= 0.0 {
        let idx = SpatialIndex::new(phi, r);
        let r2 = r * r;
        for i in 0..phi.len() {
            idx.for_each_in_ball(phi.point(i), r, |j, q| {
                if j > i && (!strict || q < r2) {
                    uf.union(i, j);
                }
            });
        }
    }
    uf.groups()
}

/// Components of the graph joining points at torus distance `<= r`.
pub fn connected_components(phi: &PointSet, r: f64) -> Vec<Vec<usize>> {
    components(phi, r, false)
}

/// Components of the graph joining points at torus distance `< r`.
pub fn connected_components_open(phi: &PointSet, r: f64) -> Vec<Vec<usize>> {
    components(phi, r, true)
}
