//! Clusters, partial clusters and branches, protected sites, lemma-based stability
//! prediction and the origin flip-time oracle.

use std::collections::VecDeque;

use crate::dynamics::{fixed_point, FlipTime};
use crate::error::{Error, Result};
use crate::lattice::{Adjacency, BoundaryCondition, Configuration, Geometry, Neighbor, Site};

/// A subset of the sites of one window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteSet {
    geometry: Geometry,
    mask: Vec<bool>,
    count: usize,
}

impl SiteSet {
    pub fn empty(geometry: Geometry) -> Self {
        SiteSet {
            geometry,
            mask: vec![false; geometry.len()],
            count: 0,
        }
    }

    pub fn from_mask(geometry: Geometry, mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&b| b).count();
        SiteSet { geometry, mask, count }
    }

    #[inline]
    pub fn contains(&self, site: Site) -> bool {
        self.geometry.contains(site) && self.mask[self.geometry.index(site)]
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn insert(&mut self, site: Site) -> bool {
        let i = self.geometry.index(site);
        if self.mask[i] {
            false
        } else {
            self.mask[i] = true;
            self.count += 1;
            true
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.geometry.site(i))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn intersects(&self, other: &SiteSet) -> bool {
        self.mask.iter().zip(&other.mask).any(|(&a, &b)| a && b)
    }
}

/// Connected components of the sites in `target_open` state under an adjacency.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    pub target_open: bool,
    pub adjacency: Adjacency,
    geometry: Geometry,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

const NO_LABEL: u32 = u32::MAX;

impl ClusterLabeling {
    #[inline]
    pub fn label(&self, site: Site) -> Option<u32> {
        self.label_at(self.geometry.index(site))
    }

    #[inline]
    pub fn label_at(&self, index: usize) -> Option<u32> {
        let l = self.labels[index];
        (l != NO_LABEL).then_some(l)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    /// Size of the cluster containing `site`, 0 when the site is not in the target state.
    pub fn size_at(&self, site: Site) -> usize {
        self.label(site).map_or(0, |l| self.sizes[l as usize])
    }

    /// CSV export: header `x,y,label,cluster_size`, one row per labeled site in index order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,label,cluster_size\n");
        for (i, &l) in self.labels.iter().enumerate() {
            if l != NO_LABEL {
                let site = self.geometry.site(i);
                s.push_str(&format!("{},{},{},{}\n", site.x, site.y, l, self.sizes[l as usize]));
            }
        }
        s
    }
}

/// Labels the components of the `target_open`-state subgraph by flood fill.
/// Labels are assigned in order of each component's first site in index order.
pub fn label_clusters(config: &Configuration, target_open: bool, adjacency: Adjacency) -> ClusterLabeling {
    let g = *config.geometry();
    let mut labels = vec![NO_LABEL; g.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..g.len() {
        if labels[start] != NO_LABEL || config.is_open_at(start) != target_open {
            continue;
        }
        let label = sizes.len() as u32;
        labels[start] = label;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            for &(dx, dy) in adjacency.offsets() {
                if let Some(j) = g.neighbor_index(i, dx, dy) {
                    if labels[j] == NO_LABEL && config.is_open_at(j) == target_open {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    ClusterLabeling {
        target_open,
        adjacency,
        geometry: g,
        labels,
        sizes,
    }
}

fn z2_neighbors_in_window(g: &Geometry, a: Site) -> impl Iterator<Item = Site> + '_ {
    g.neighbors(a, Adjacency::Z2).into_iter().filter_map(|n| match n {
        Neighbor::Site(s) => Some(s),
        Neighbor::Halo { .. } => None,
    })
}

/// Sites reachable from `x_prime` by monochromatic Z^2-paths whose first step avoids `x`.
/// The set may contain `x` itself when a loop leads back to it.
pub fn partial_cluster(config: &Configuration, x: Site, x_prime: Site) -> Result<SiteSet> {
    let g = *config.geometry();
    g.check(x)?;
    g.check(x_prime)?;
    if !z2_neighbors_in_window(&g, x_prime).any(|s| s == x) {
        return Err(Error::NotNeighbors { a: x, b: x_prime });
    }
    Ok(partial_cluster_unchecked(config, x, x_prime))
}

fn partial_cluster_unchecked(config: &Configuration, x: Site, x_prime: Site) -> SiteSet {
    let g = *config.geometry();
    let state = config.is_open(x_prime);
    let xi = g.index(x);
    let start = g.index(x_prime);
    let mut set = SiteSet::empty(g);
    set.mask[start] = true;
    set.count = 1;
    let mut stack = vec![start];
    while let Some(i) = stack.pop() {
        for &(dx, dy) in Adjacency::Z2.offsets() {
            if let Some(j) = g.neighbor_index(i, dx, dy) {
                if i == start && j == xi {
                    continue;
                }
                if !set.mask[j] && config.is_open_at(j) == state {
                    set.mask[j] = true;
                    set.count += 1;
                    stack.push(j);
                }
            }
        }
    }
    set
}

/// Closed sites that belong to at least one fully closed plaquette.
pub fn protected_sites(config: &Configuration) -> SiteSet {
    let g = *config.geometry();
    let mut set = SiteSet::empty(g);
    let (w, h) = (g.width as i32, g.height as i32);
    let periodic = g.boundary == BoundaryCondition::Periodic;
    let (cx, cy) = if periodic { (w, h) } else { (w - 1, h - 1) };
    for y in 0..cy {
        for x in 0..cx {
            let corner = g.index(Site::new(x, y));
            let verts = [
                Some(corner),
                g.neighbor_index(corner, 1, 0),
                g.neighbor_index(corner, 0, 1),
                g.neighbor_index(corner, 1, 1),
            ];
            if verts.iter().all(|v| matches!(v, Some(i) if !config.is_open_at(*i))) {
                for i in verts.into_iter().flatten() {
                    if !set.mask[i] {
                        set.mask[i] = true;
                        set.count += 1;
                    }
                }
            }
        }
    }
    set
}

/// Closed sites that the two structural lemmas certify as stable: sites on closed Z^2-loops,
/// sites on closed Z^2-paths joining two protected sites, and protected sites.
/// Always a subset of the closed sites of the fixed point.
pub fn predict_stable(config: &Configuration) -> SiteSet {
    let g = *config.geometry();
    let protected = protected_sites(config);
    let b = closed_bridges(config, &protected);
    let mut mask = vec![false; g.len()];
    for &v in &b.order {
        if protected.mask[v] || b.on_loop(v) {
            mask[v] = true;
            continue;
        }
        // every incident edge is a bridge: v joins two protected sites iff at least two of
        // the sides hanging off v contain one
        let total = b.sub_prot[b.comp_root[v]];
        let sides = b.adj[v]
            .iter()
            .filter(|&&(u, _)| {
                let far = if b.parent[u] == v { b.sub_prot[u] } else { total - b.sub_prot[v] };
                far > 0
            })
            .count();
        if sides >= 2 {
            mask[v] = true;
        }
    }
    SiteSet::from_mask(g, mask)
}

/// Closed sites lying on a closed Z^2-loop (a cycle of the closed subgraph, including
/// periodic wrap-around cycles).
pub fn closed_loop_sites(config: &Configuration) -> SiteSet {
    let g = *config.geometry();
    let b = closed_bridges(config, &SiteSet::empty(g));
    let mut mask = vec![false; g.len()];
    for &v in &b.order {
        mask[v] = b.on_loop(v);
    }
    SiteSet::from_mask(g, mask)
}

struct Bridges {
    adj: Vec<Vec<(usize, usize)>>,
    self_loop: Vec<bool>,
    bridge: Vec<bool>,
    parent: Vec<usize>,
    sub_prot: Vec<usize>,
    comp_root: Vec<usize>,
    order: Vec<usize>,
}

impl Bridges {
    fn on_loop(&self, v: usize) -> bool {
        self.self_loop[v] || self.adj[v].iter().any(|&(_, e)| !self.bridge[e])
    }
}

fn closed_bridges(config: &Configuration, protected: &SiteSet) -> Bridges {
    let g = *config.geometry();
    let n = g.len();

    // Edge list of the closed subgraph, one edge per neighbor-entry pair, so that periodic
    // wrap-around multi-edges and self-loops are kept.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut on_cycle = vec![false; n];
    let mut edge = 0usize;
    for i in 0..n {
        if config.is_open_at(i) {
            continue;
        }
        // (1,0) and (0,1) only: each undirected edge once
        for (dx, dy) in [(1, 0), (0, 1)] {
            if let Some(j) = g.neighbor_index(i, dx, dy) {
                if config.is_open_at(j) {
                    continue;
                }
                if i == j {
                    on_cycle[i] = true;
                    continue;
                }
                adj[i].push((j, edge));
                adj[j].push((i, edge));
                edge += 1;
            }
        }
    }

    // Iterative Tarjan bridge search with subtree protected counts.
    let mut disc = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut parent_edge = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut sub_prot = vec![0usize; n];
    let mut comp_root = vec![usize::MAX; n];
    let mut bridge = vec![false; edge];
    let mut timer = 0u32;
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if config.is_open_at(root) || disc[root] != u32::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        comp_root[root] = root;
        order.push(root);
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < adj[v].len() {
                let (u, e) = adj[v][*k];
                *k += 1;
                if e == parent_edge[v] {
                    continue;
                }
                if disc[u] == u32::MAX {
                    disc[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    parent[u] = v;
                    parent_edge[u] = e;
                    comp_root[u] = root;
                    order.push(u);
                    stack.push((u, 0));
                } else {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                sub_prot[v] += protected.mask[v] as usize;
                if let Some(&(p, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    sub_prot[p] += sub_prot[v];
                    if low[v] > disc[p] {
                        bridge[parent_edge[v]] = true;
                    }
                }
            }
        }
    }

    Bridges {
        adj,
        self_loop: on_cycle,
        bridge,
        parent,
        sub_prot,
        comp_root,
        order,
    }
}

/// Closed 2-core by parallel leaf pruning, independent of the bootstrap dynamics: a closed
/// site is removed in the first round in which at most one of its four Z^2 neighbor entries
/// is a surviving closed site or a closed halo site. Returns the removal round of every
/// initially closed site (`None` for the core).
pub fn closed_two_core(config: &Configuration) -> Vec<Option<u32>> {
    let g = *config.geometry();
    let n = g.len();
    let halo_closed = g.boundary == BoundaryCondition::ClosedHalo;
    let mut alive: Vec<bool> = (0..n).map(|i| !config.is_open_at(i)).collect();
    let mut degree = vec![0u8; n];
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        for &(dx, dy) in Adjacency::Z2.offsets() {
            degree[i] += match g.neighbor_index(i, dx, dy) {
                Some(j) => alive[j] as u8,
                None => halo_closed as u8,
            };
        }
    }
    let mut removed: Vec<Option<u32>> = vec![None; n];
    let mut queued = vec![0u32; n];
    let mut round = 0u32;
    let mut leaves: Vec<usize> = (0..n).filter(|&i| alive[i] && degree[i] <= 1).collect();
    while !leaves.is_empty() {
        round += 1;
        for &i in &leaves {
            alive[i] = false;
            removed[i] = Some(round);
        }
        let mut next = Vec::new();
        for &i in &leaves {
            for &(dx, dy) in Adjacency::Z2.offsets() {
                if let Some(j) = g.neighbor_index(i, dx, dy) {
                    if alive[j] {
                        degree[j] -= 1;
                        if degree[j] <= 1 && queued[j] != round {
                            queued[j] = round;
                            next.push(j);
                        }
                    }
                }
            }
        }
        leaves = next;
    }
    removed
}

/// One of the four branches hanging off a closed center site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branch {
    /// The neighbor is open (or a halo entry).
    Empty { neighbor: Option<Site> },
    Cluster(BranchCluster),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchCluster {
    pub neighbor: Site,
    pub sites: SiteSet,
    pub contains_protected: bool,
    pub contains_center: bool,
    /// No other branch of the same center has the same site set.
    pub distinct: bool,
}

#[derive(Clone, Debug)]
pub struct BranchDecomposition {
    pub center: Site,
    /// In Z^2 offset order: +x, -y, -x, +y.
    pub branches: Vec<Branch>,
    /// Closed halo entries among the center's neighbor entries.
    pub closed_halo_entries: usize,
}

impl BranchDecomposition {
    pub fn clusters(&self) -> impl Iterator<Item = &BranchCluster> {
        self.branches.iter().filter_map(|b| match b {
            Branch::Cluster(c) => Some(c),
            Branch::Empty { .. } => None,
        })
    }

    pub fn all_distinct(&self) -> bool {
        self.clusters().all(|c| c.distinct && !c.contains_center)
    }
}

/// Partial clusters `C_(center, x_i)` of a closed center through its four Z^2-neighbors.
pub fn branch_decomposition(config: &Configuration, center: Site) -> Result<BranchDecomposition> {
    let g = *config.geometry();
    g.check(center)?;
    if config.is_open(center) {
        return Err(Error::OpenCenter(center));
    }
    let protected = protected_sites(config);
    let mut branches = Vec::with_capacity(4);
    let mut closed_halo_entries = 0;
    for n in g.neighbors(center, Adjacency::Z2) {
        match n {
            Neighbor::Halo { open } => {
                if !open {
                    closed_halo_entries += 1;
                }
                branches.push(Branch::Empty { neighbor: None });
            }
            Neighbor::Site(s) if config.is_open(s) => branches.push(Branch::Empty { neighbor: Some(s) }),
            Neighbor::Site(s) => {
                let sites = partial_cluster_unchecked(config, center, s);
                branches.push(Branch::Cluster(BranchCluster {
                    neighbor: s,
                    contains_protected: sites.intersects(&protected),
                    contains_center: sites.contains(center),
                    sites,
                    distinct: true,
                }));
            }
        }
    }
    let sets: Vec<Option<SiteSet>> = branches
        .iter()
        .map(|b| match b {
            Branch::Cluster(c) => Some(c.sites.clone()),
            Branch::Empty { .. } => None,
        })
        .collect();
    for (i, b) in branches.iter_mut().enumerate() {
        if let Branch::Cluster(c) = b {
            c.distinct = sets
                .iter()
                .enumerate()
                .all(|(j, other)| j == i || other.as_ref() != Some(&c.sites));
        }
    }
    Ok(BranchDecomposition {
        center,
        branches,
        closed_halo_entries,
    })
}

/// Flip time of a closed site predicted from its branch structure alone:
///
/// * a loop through the center, or stable sites in two or more branches: never;
/// * stable sites in exactly one branch: one plus the longest rooted path among the others;
/// * no stable branch: one plus the second-longest rooted path.
///
/// A rooted path starts at the branch's neighbor of the center and descends the branch
/// tree; its length is its number of sites, which is also the round in which that neighbor
/// is pruned while the center is still closed.
///
/// Errors with [`Error::WindowTruncatedBranch`] when the center or any branch site lies on
/// the rim of a non-periodic window, since the halo would then stand in for lattice sites.
pub fn origin_flip_time_oracle(config: &Configuration, center: Site) -> Result<FlipTime> {
    flip_time_oracle(config, center, true)
}

/// Same prediction, treating the window and its halo as the whole lattice.
pub fn origin_flip_time_oracle_in_window(config: &Configuration, center: Site) -> Result<FlipTime> {
    flip_time_oracle(config, center, false)
}

fn on_rim(g: &Geometry, s: Site) -> bool {
    g.boundary != BoundaryCondition::Periodic
        && (s.x == 0 || s.y == 0 || s.x as usize == g.width - 1 || s.y as usize == g.height - 1)
}

fn flip_time_oracle(config: &Configuration, center: Site, reject_truncated: bool) -> Result<FlipTime> {
    let g = *config.geometry();
    let dec = branch_decomposition(config, center)?;
    if !dec.all_distinct() {
        return Ok(FlipTime::Never);
    }
    if reject_truncated {
        if on_rim(&g, center) {
            return Err(Error::WindowTruncatedBranch(center));
        }
        for c in dec.clusters() {
            if let Some(s) = c.sites.iter().find(|&s| on_rim(&g, s)) {
                return Err(Error::WindowTruncatedBranch(s));
            }
        }
    }

    // closed halo entries never flip, so they act like stable branches
    let mut stable = dec.closed_halo_entries;
    let mut depths = Vec::with_capacity(4);
    for c in dec.clusters() {
        if branch_has_stable_site(config, &c.sites) {
            stable += 1;
        } else {
            depths.push(rooted_depth(&g, &c.sites, c.neighbor));
        }
    }
    if stable >= 2 {
        return Ok(FlipTime::Never);
    }
    depths.sort_unstable_by(|a, b| b.cmp(a));
    let wait = if stable == 1 {
        depths.first().copied().unwrap_or(0)
    } else {
        depths.get(1).copied().unwrap_or(0)
    };
    Ok(FlipTime::At(wait + 1))
}

/// Runs the exact dynamics on the branch alone (everything else open, same boundary).
/// A branch touching a closed halo entry also counts: while the center is closed, the path
/// from the center to that entry has two closed neighbors at every site and never opens.
fn branch_has_stable_site(config: &Configuration, sites: &SiteSet) -> bool {
    let g = config.geometry();
    let touches_closed_halo = sites.iter().any(|s| {
        g.neighbors(s, Adjacency::Z2)
            .iter()
            .any(|n| matches!(n, Neighbor::Halo { open: false }))
    });
    if touches_closed_halo {
        return true;
    }
    let isolated = Configuration::from_states(*config.geometry(), sites.mask().iter().map(|&b| !b).collect())
        .expect("same geometry");
    let r = fixed_point(&isolated);
    sites.iter().any(|s| !r.final_config.is_open(s))
}

/// Number of sites on a longest path starting at `root` inside a loop-free branch.
fn rooted_depth(g: &Geometry, sites: &SiteSet, root: Site) -> u32 {
    let mut dist = vec![u32::MAX; g.len()];
    let r = g.index(root);
    dist[r] = 1;
    let mut queue = VecDeque::from([r]);
    let mut best = 1;
    while let Some(i) = queue.pop_front() {
        best = best.max(dist[i]);
        for &(dx, dy) in Adjacency::Z2.offsets() {
            if let Some(j) = g.neighbor_index(i, dx, dy) {
                if sites.contains_index(j) && dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    best
}
