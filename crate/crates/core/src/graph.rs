//! Discretization of a domain into a metric graph whose node density scales
//! with 1/d_D.
//!
//! Nodes live on nested dyadic lattices anchored at the origin. A lattice
//! point of spacing `s` is a node when `σ(p) ≤ 2s`, where the target spacing
//! `σ(p) = max(d_D(p), floor(p)) / (ρ₀·2^level)` and `floor(p)` grows linearly with
//! the distance to a set of focus points (the query points, or boundary
//! features when no queries are known in advance).
//! Raising the level halves every target spacing, so node sets are nested.
//!
//! Each node carries a neighbor radius fixed by the level at which it first
//! appears; `u ~ v` iff `|u − v| ≤ min(r_u, r_v)`. Radii never exceed
//! `d_D/2`, so every edge segment lies in D, and edge sets are nested too,
//! which makes graph distances monotone nonincreasing in the level.
//!
//! Focus points passed at build time also act as hubs: each is joined to its
//! star of nearby nodes and by direct segments to the other hubs it sees.
//! Queries between hubs are therefore distances in one fixed weighted graph
//! and satisfy the triangle inequality exactly.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::OnceLock;

use kdtree::KdTree;

use crate::domain::Domain;
use crate::error::{QhError, Result};
use crate::norm::{lp_dist, Coords, Point};
use crate::quad::{qh_segment_length, DEFAULT_TOL};
use crate::visibility::visibility_distance;

/// Tunables of the graph discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub level: u32,
    /// Boundary-distance-to-spacing ratio at level 0.
    pub rho0: f64,
    /// Neighbor radius at level 0, in units of target spacing; grows by √2 per level.
    pub radius_factor: f64,
    /// Slope of the resolution floor away from focus points.
    pub floor_slope: f64,
    /// Explicit resolution floor; derived from focus points when absent.
    pub min_floor: Option<f64>,
    pub quad_tol: f64,
    pub max_nodes: usize,
    /// Working region for unbounded domains (or an override for bounded ones).
    pub region: Option<(Vec<f64>, Vec<f64>)>,
    /// Also refine around boundary features (slit tips, vertices). Needed
    /// for accurate lengths, not for quasihyperbolic distances.
    pub resolve_features: bool,
}

impl GraphConfig {
    pub fn for_dim(dim: usize, level: u32) -> Self {
        let (rho0, radius_factor) = if dim <= 2 { (8.0, 3.0) } else { (4.0, 2.0) };
        GraphConfig {
            level,
            rho0,
            radius_factor,
            floor_slope: 0.5,
            min_floor: None,
            quad_tol: DEFAULT_TOL,
            max_nodes: 4_000_000,
            region: None,
            resolve_features: false,
        }
    }

    fn rho(&self, level: u32) -> f64 {
        self.rho0 * 2f64.powi(level as i32)
    }

    fn neighbor_factor(&self, level: u32) -> f64 {
        self.radius_factor * 2f64.powf(level as f64 / 2.0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    coords: Coords,
    clearance: f64,
    radius: f64,
}

/// Edge with both weights: norm length and quasihyperbolic length.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub to: u32,
    pub length: f64,
    pub qh: f64,
}

/// Which edge weight a shortest-path query uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Length,
    Quasihyperbolic,
}

/// Immutable metric graph on a domain. Adjacency lists are computed on first
/// use and cached; concurrent queries are safe.
pub struct MetricGraph {
    dom: Domain,
    cfg: GraphConfig,
    nodes: Vec<Node>,
    tree: KdTree<f64, u32, Coords>,
    adjacency: Vec<OnceLock<Box<[Edge]>>>,
    focus: Vec<Point>,
    delta0: f64,
    hubs: Vec<Point>,
    hub_index: HashMap<Vec<u64>, usize>,
    hub_star: Vec<Box<[Edge]>>,
    /// Reverse star edges keyed by node; `to` is a hub index.
    hub_in: HashMap<u32, Vec<Edge>>,
    /// Direct segments between hubs; `to` is a hub index.
    hub_direct: Vec<OnceLock<Box<[Edge]>>>,
}

fn coord_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

/// Vertex of the search space: lattice nodes first, then hubs.
const SOURCE: usize = usize::MAX;

/// Result of a graph shortest-path query.
#[derive(Debug, Clone)]
pub struct GraphPath {
    pub weight: f64,
    pub vertices: Vec<Point>,
}

impl MetricGraph {
    /// Build the graph with the given focus points (typically all query points
    /// that will be used against this graph).
    pub fn build(dom: &Domain, focus: &[Point], cfg: GraphConfig) -> Result<Self> {
        let n = dom.dim();
        if n > 8 {
            return Err(QhError::Unsupported("metric graphs support at most 8 dimensions".into()));
        }
        for p in focus {
            if !dom.contains(p.coords()) {
                return Err(QhError::input(format!("focus point {:?} is not in the domain", p.0)));
            }
        }
        // features far from the queries only cost resolution: the
        // quasihyperbolic price of rounding a tip is scale invariant
        let mut all_focus: Vec<Point> = focus.to_vec();
        if focus.is_empty() || cfg.resolve_features {
            all_focus.extend(dom.feature_points());
        }

        let delta0 = cfg.min_floor.unwrap_or_else(|| {
            let from_focus = focus
                .iter()
                .map(|p| dom.boundary_distance(p.coords()) / 4.0)
                .fold(f64::INFINITY, f64::min);
            let from_features = dom.feature_scale().map_or(f64::INFINITY, |s| s / 8.0);
            let mut d = from_focus;
            if !d.is_finite() || cfg.resolve_features {
                d = d.min(from_features);
            }
            if !d.is_finite() {
                d = dom.bounding_box().map_or(0.01, |(lo, hi)| {
                    lo.iter().zip(&hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min) / 64.0
                });
            }
            d
        });
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(QhError::input("graph resolution floor must be positive"));
        }

        let (lo, hi) = working_region(dom, &all_focus, &cfg)?;
        let mut focus_tree = KdTree::new(n);
        for (i, p) in all_focus.iter().enumerate() {
            focus_tree
                .add(p.0.clone(), i)
                .map_err(|e| QhError::input(format!("bad focus point: {e:?}")))?;
        }

        let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let root = 2f64.powi((extent / 4.0).log2().ceil() as i32);
        let mut b = Builder {
            dom,
            cfg: &cfg,
            focus_tree,
            has_focus: !all_focus.is_empty(),
            delta0,
            lo: lo.clone(),
            hi: hi.clone(),
            nodes: Vec::new(),
            index: HashMap::new(),
            min_spacing: delta0 / (cfg.rho(cfg.level) * 4.0),
            overflow: false,
        };
        b.run(root);
        if b.overflow {
            return Err(QhError::input(format!(
                "metric graph exceeds {} nodes; lower the level",
                cfg.max_nodes
            )));
        }
        let nodes = b.nodes;
        let mut tree = KdTree::with_capacity(n, 16);
        for (i, node) in nodes.iter().enumerate() {
            tree.add(node.coords.clone(), i as u32)
                .map_err(|e| QhError::input(format!("bad node: {e:?}")))?;
        }
        let adjacency = (0..nodes.len()).map(|_| OnceLock::new()).collect();
        let mut g = MetricGraph {
            dom: dom.clone(),
            cfg,
            nodes,
            tree,
            adjacency,
            focus: all_focus,
            delta0,
            hubs: Vec::new(),
            hub_index: HashMap::new(),
            hub_star: Vec::new(),
            hub_in: HashMap::new(),
            hub_direct: Vec::new(),
        };
        for p in focus {
            let key = coord_key(p.coords());
            if g.hub_index.contains_key(&key) {
                continue;
            }
            let h = g.hubs.len();
            let star = g.star(p)?;
            for e in &star {
                g.hub_in.entry(e.to).or_default().push(Edge { to: h as u32, ..*e });
            }
            g.hub_index.insert(key, h);
            g.hubs.push(p.clone());
            g.hub_star.push(star.into_boxed_slice());
            g.hub_direct.push(OnceLock::new());
        }
        Ok(g)
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn level(&self) -> u32 {
        self.cfg.level
    }

    pub fn config(&self) -> &GraphConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn resolution_floor(&self) -> f64 {
        self.delta0
    }

    pub fn node_point(&self, i: usize) -> Point {
        Point(self.nodes[i].coords.clone())
    }

    /// Node with the largest boundary distance.
    pub fn deepest_node(&self) -> Option<Point> {
        self.nodes
            .iter()
            .max_by(|a, b| a.clearance.total_cmp(&b.clearance))
            .map(|n| Point(n.coords.clone()))
    }

    fn p(&self) -> f64 {
        self.dom.norm().p()
    }

    fn floor_at(&self, x: &[f64]) -> f64 {
        let near = self
            .focus
            .iter()
            .map(|f| lp_dist(2.0, f.coords(), x))
            .fold(f64::INFINITY, f64::min);
        (self.cfg.floor_slope * near).max(self.delta0)
    }

    /// Adjacency of a node, computed on first use.
    pub fn edges(&self, u: usize) -> &[Edge] {
        self.adjacency[u].get_or_init(|| {
            let node = &self.nodes[u];
            let p = self.p();
            let dist = |a: &[f64], b: &[f64]| lp_dist(p, a, b);
            let found = self.tree.within(&node.coords, node.radius, &dist).unwrap_or_default();
            let mut out = Vec::with_capacity(found.len());
            for (len, &v) in found {
                let v = v as usize;
                if v == u || len > self.nodes[v].radius || len <= 0.0 {
                    continue;
                }
                let qh = qh_segment_length(
                    &self.dom,
                    &node.coords,
                    &self.nodes[v].coords,
                    self.cfg.quad_tol,
                );
                out.push(Edge { to: v as u32, length: len, qh });
            }
            out.into_boxed_slice()
        })
    }

    fn hub_segments(&self, h: usize) -> &[Edge] {
        self.hub_direct[h].get_or_init(|| {
            let a = self.hubs[h].coords();
            let norm = self.dom.norm();
            self.hubs
                .iter()
                .enumerate()
                .filter(|&(k, b)| k != h && self.dom.segment_in_domain(a, b.coords(), 0.0))
                .map(|(k, b)| Edge {
                    to: k as u32,
                    length: norm.dist(a, b.coords()),
                    qh: qh_segment_length(&self.dom, a, b.coords(), self.cfg.quad_tol),
                })
                .collect()
        })
    }

    fn hub_of(&self, q: &Point) -> Option<usize> {
        self.hub_index.get(&coord_key(q.coords())).copied()
    }

    fn vertex_coords(&self, v: usize) -> &[f64] {
        match v.checked_sub(self.nodes.len()) {
            Some(h) => self.hubs[h].coords(),
            None => &self.nodes[v].coords,
        }
    }

    /// Neighbors of a search vertex as `(vertex, edge)` pairs.
    fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize, &Edge)) {
        let n = self.nodes.len();
        if v < n {
            for e in self.edges(v) {
                f(e.to as usize, e);
            }
            if let Some(into) = self.hub_in.get(&(v as u32)) {
                for e in into {
                    f(n + e.to as usize, e);
                }
            }
        } else {
            let h = v - n;
            for e in self.hub_star[h].iter() {
                f(e.to as usize, e);
            }
            for e in self.hub_segments(h) {
                f(n + e.to as usize, e);
            }
        }
    }

    /// Star of a query point: nodes it connects to, with both weights.
    fn star(&self, q: &Point) -> Result<Vec<Edge>> {
        let d = self.dom.boundary_distance(q.coords());
        if d <= 0.0 {
            return Err(QhError::input(format!("point {:?} is not in the domain", q.0)));
        }
        let level = self.cfg.level;
        let floor = self.floor_at(q.coords());
        let sigma = d.max(floor) / self.cfg.rho(level);
        let p = self.p();
        let dist = |a: &[f64], b: &[f64]| lp_dist(p, a, b);
        let r1 = (d / 2.0).min(self.cfg.neighbor_factor(level) * sigma);
        let mut found: Vec<(f64, usize)> = self
            .tree
            .within(q.coords(), r1, &dist)
            .unwrap_or_default()
            .into_iter()
            .map(|(l, &i)| (l, i as usize))
            .collect();
        if found.len() < 4 {
            found = self
                .tree
                .within(q.coords(), 0.999 * d, &dist)
                .unwrap_or_default()
                .into_iter()
                .map(|(l, &i)| (l, i as usize))
                .take(64)
                .collect();
        }
        if found.is_empty() {
            // fall back to exact segment tests against the nearest nodes
            found = self
                .tree
                .nearest(q.coords(), 32, &dist)
                .unwrap_or_default()
                .into_iter()
                .map(|(l, &i)| (l, i as usize))
                .filter(|&(_, i)| {
                    self.dom.segment_in_domain(q.coords(), &self.nodes[i].coords, 0.0)
                })
                .collect();
        }
        Ok(found
            .into_iter()
            .filter(|&(l, _)| l > 0.0)
            .map(|(l, i)| Edge {
                to: i as u32,
                length: l,
                qh: qh_segment_length(&self.dom, q.coords(), &self.nodes[i].coords, self.cfg.quad_tol),
            })
            .collect())
    }

    /// Shortest path between two domain points using the chosen weight.
    pub fn shortest_path(&self, x: &Point, y: &Point, weight: Weight) -> Result<GraphPath> {
        if x == y {
            return Ok(GraphPath { weight: 0.0, vertices: vec![x.clone()] });
        }
        let hx = self.hub_of(x);
        let hy = self.hub_of(y);
        let n = self.nodes.len();
        let w = |e: &Edge| match weight {
            Weight::Length => e.length,
            Weight::Quasihyperbolic => e.qh,
        };

        // direct segment between the query points when it lies in D
        let mut best = f64::INFINITY;
        let direct_len = self.dom.norm().dist(x.coords(), y.coords());
        if self.dom.segment_in_domain(x.coords(), y.coords(), 0.0) {
            best = match weight {
                Weight::Length => direct_len,
                Weight::Quasihyperbolic => {
                    qh_segment_length(&self.dom, x.coords(), y.coords(), self.cfg.quad_tol)
                }
            };
        }

        let mut into_target: HashMap<usize, f64> = HashMap::new();
        match hy {
            Some(h) => {
                into_target.insert(n + h, 0.0);
            }
            None => {
                for e in self.star(y)? {
                    into_target.insert(e.to as usize, w(&e));
                }
            }
        }

        // A* with the certified lower bound as heuristic; it never exceeds
        // the weight of any path, so the search stays exact
        let exact_inner = self.dom.inner_metric_is_norm();
        let dy = self.dom.boundary_distance(y.coords());
        let heuristic = |v: &[f64]| -> f64 {
            let lam = if exact_inner {
                self.dom.norm().dist(v, y.coords())
            } else {
                visibility_distance(&self.dom, v, y.coords())
                    .unwrap_or_else(|| self.dom.norm().dist(v, y.coords()))
            };
            let h = match weight {
                Weight::Length => lam,
                Weight::Quasihyperbolic => {
                    let dv = self.dom.boundary_distance(v);
                    (lam / dv.min(dy)).ln_1p().max((dv / dy).ln().abs())
                }
            };
            h * (1.0 - 1e-12)
        };
        let mut h_cache: HashMap<usize, f64> = HashMap::new();
        let mut h_of = |v: usize| -> f64 {
            *h_cache.entry(v).or_insert_with(|| heuristic(self.vertex_coords(v)))
        };

        let mut dist: HashMap<usize, f64> = HashMap::new();
        let mut prev: HashMap<usize, usize> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut best_pred = SOURCE;
        let source = match hx {
            Some(h) => {
                dist.insert(n + h, 0.0);
                heap.push(State { cost: h_of(n + h), node: n + h });
                n + h
            }
            None => {
                for e in self.star(x)? {
                    let v = e.to as usize;
                    let nd = w(&e);
                    if dist.get(&v).is_none_or(|&old| nd < old) {
                        dist.insert(v, nd);
                        prev.insert(v, SOURCE);
                        heap.push(State { cost: nd + h_of(v), node: v });
                    }
                }
                SOURCE
            }
        };
        while let Some(State { cost: f, node }) = heap.pop() {
            if f >= best {
                break;
            }
            let g = dist[&node];
            if f > g + h_of(node) {
                continue;
            }
            if let Some(&tail) = into_target.get(&node) {
                if g + tail < best {
                    best = g + tail;
                    best_pred = node;
                }
            }
            self.for_each_neighbor(node, |v, e| {
                let nd = g + w(e);
                if dist.get(&v).is_none_or(|&old| nd < old) {
                    let fv = nd + h_of(v);
                    if fv < best {
                        dist.insert(v, nd);
                        prev.insert(v, node);
                        heap.push(State { cost: fv, node: v });
                    }
                }
            });
        }
        if !best.is_finite() {
            return Err(QhError::Unreachable { level: self.cfg.level });
        }
        let mut vertices = vec![y.clone()];
        // a hub target coincides with y, and the direct segment leaves no trail
        let mut cur = match hy {
            Some(h) if best_pred == n + h => prev[&best_pred],
            _ => best_pred,
        };
        while cur != source && cur != SOURCE {
            vertices.push(Point::new(self.vertex_coords(cur)));
            cur = prev[&cur];
        }
        vertices.push(x.clone());
        vertices.reverse();
        Ok(GraphPath { weight: best, vertices })
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    cost: f64,
    node: usize,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn working_region(
    dom: &Domain,
    focus: &[Point],
    cfg: &GraphConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(r) = &cfg.region {
        return Ok(r.clone());
    }
    if let Some(b) = dom.bounding_box() {
        return Ok(b);
    }
    if focus.is_empty() {
        return Err(QhError::input("unbounded domain needs focus points or an explicit region"));
    }
    let n = dom.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut max_d: f64 = 0.0;
    for p in focus {
        for k in 0..n {
            lo[k] = lo[k].min(p.0[k]);
            hi[k] = hi[k].max(p.0[k]);
        }
        max_d = max_d.max(dom.boundary_distance(p.coords()));
    }
    let diam = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let pad = 2.0 * diam.max(max_d);
    Ok((lo.iter().map(|v| v - pad).collect(), hi.iter().map(|v| v + pad).collect()))
}

struct Builder<'a> {
    dom: &'a Domain,
    cfg: &'a GraphConfig,
    focus_tree: KdTree<f64, usize, Coords>,
    has_focus: bool,
    delta0: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    nodes: Vec<Node>,
    index: HashMap<SmallKey, u32>,
    min_spacing: f64,
    overflow: bool,
}

type SmallKey = smallvec::SmallVec<[u64; 3]>;

impl Builder<'_> {
    fn floor(&self, x: &[f64]) -> f64 {
        if !self.has_focus {
            return self.delta0;
        }
        let sq = |a: &[f64], b: &[f64]| lp_dist(2.0, a, b);
        let near = self
            .focus_tree
            .nearest(x, 1, &sq)
            .ok()
            .and_then(|v| v.first().map(|(d, _)| *d))
            .unwrap_or(f64::INFINITY);
        (self.cfg.floor_slope * near).max(self.delta0)
    }

    fn run(&mut self, root: f64) {
        let n = self.dom.dim();
        let start: Vec<i64> = self.lo.iter().map(|l| (l / root).floor() as i64).collect();
        let stop: Vec<i64> = self.hi.iter().map(|h| (h / root).ceil() as i64).collect();
        // root lattice points first, then recursive refinement of root cells
        let mut idx = start.clone();
        loop {
            let p: Coords = idx.iter().map(|&i| i as f64 * root).collect();
            self.try_add(p, root, true);
            if !advance(&mut idx, &start, &stop) {
                break;
            }
        }
        let cell_stop: Vec<i64> = stop.iter().map(|s| s - 1).collect();
        let mut idx = start.clone();
        loop {
            let lo: Coords = idx.iter().map(|&i| i as f64 * root).collect();
            self.process(&lo, root);
            if self.overflow || !advance(&mut idx, &start, &cell_stop) {
                break;
            }
        }
        let _ = n;
    }

    fn inside_region(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    fn try_add(&mut self, p: Coords, lattice: f64, root: bool) {
        if !self.inside_region(&p) {
            return;
        }
        let d = self.dom.boundary_distance(&p);
        if d <= 0.0 {
            return;
        }
        let floor = self.floor(&p);
        if d < floor / 2.0 {
            return;
        }
        let level = self.cfg.level;
        let base = d.max(floor);
        let sigma_l = base / self.cfg.rho(level);
        if !root && sigma_l > 2.0 * lattice {
            return;
        }
        let native = if root {
            0
        } else {
            let sigma0 = base / self.cfg.rho0;
            let r = (sigma0 / (2.0 * lattice)).log2().ceil();
            if r <= 0.0 {
                0
            } else {
                (r as u32).min(level)
            }
        };
        let radius = (d / 2.0)
            .min(self.cfg.neighbor_factor(native) * base / self.cfg.rho(native));
        let key: SmallKey = p.iter().map(|c| (c + 0.0).to_bits()).collect();
        if self.index.contains_key(&key) {
            return;
        }
        if self.nodes.len() >= self.cfg.max_nodes {
            self.overflow = true;
            return;
        }
        self.index.insert(key, self.nodes.len() as u32);
        self.nodes.push(Node { coords: p, clearance: d, radius });
    }

    fn process(&mut self, lo: &[f64], s: f64) {
        if self.overflow {
            return;
        }
        let n = lo.len();
        if lo.iter().zip(&self.hi).any(|(l, h)| *l > *h)
            || lo.iter().zip(&self.lo).any(|(l, bl)| l + s < *bl)
        {
            return;
        }
        let center: Coords = lo.iter().map(|l| l + s / 2.0).collect();
        let half: Coords = smallvec::smallvec![s / 2.0; n];
        let h = self.dom.norm().eval(&half);
        if self.dom.exterior_distance(&center) > h {
            return;
        }
        let dc = self.dom.boundary_distance(&center);
        let flc = self.floor(&center);
        let eta = self.cfg.floor_slope;
        let level = self.cfg.level;
        let floor_lb = (flc - eta * h * 2f64.sqrt()).max(self.delta0);
        let sigma_lb = (dc - h).max(floor_lb) / self.cfg.rho(level);
        if sigma_lb > s {
            return;
        }
        if dc + h < floor_lb / 2.0 {
            return;
        }
        let child = s / 2.0;
        if child < self.min_spacing {
            return;
        }
        // lattice points of spacing s/2 in the closed cell that are not on the coarse lattice
        let mut k = vec![0u8; n];
        loop {
            if k.contains(&1) {
                let p: Coords = lo.iter().zip(&k).map(|(l, &ki)| l + ki as f64 * child).collect();
                self.try_add(p, child, false);
            }
            if !advance_digits(&mut k, 3) {
                break;
            }
        }
        let mut c = vec![0u8; n];
        loop {
            let clo: Coords = lo.iter().zip(&c).map(|(l, &ci)| l + ci as f64 * child).collect();
            self.process(&clo, child);
            if !advance_digits(&mut c, 2) {
                break;
            }
        }
    }
}

fn advance(idx: &mut [i64], start: &[i64], stop: &[i64]) -> bool {
    for k in 0..idx.len() {
        if idx[k] < stop[k] {
            idx[k] += 1;
            return true;
        }
        idx[k] = start[k];
    }
    false
}

fn advance_digits(d: &mut [u8], base: u8) -> bool {
    for k in 0..d.len() {
        if d[k] + 1 < base {
            d[k] += 1;
            return true;
        }
        d[k] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;

    fn ball_graph(level: u32) -> MetricGraph {
        let dom = Domain::unit_ball(NormSpec::euclidean(2));
        let focus = [Point::new(&[0.0, 0.0]), Point::new(&[0.9, 0.0])];
        MetricGraph::build(&dom, &focus, GraphConfig::for_dim(2, level)).unwrap()
    }

    #[test]
    fn nodes_are_in_domain_and_nested() {
        let g0 = ball_graph(0);
        let g1 = ball_graph(1);
        assert!(g0.node_count() > 100);
        assert!(g1.node_count() > g0.node_count());
        let set1: std::collections::HashSet<Vec<u64>> = (0..g1.node_count())
            .map(|i| g1.node_point(i).0.iter().map(|c| c.to_bits()).collect())
            .collect();
        for i in 0..g0.node_count() {
            let p = g0.node_point(i);
            assert!(g0.domain().contains(p.coords()));
            let key: Vec<u64> = p.0.iter().map(|c| c.to_bits()).collect();
            assert!(set1.contains(&key), "node {:?} missing at level 1", p.0);
        }
    }

    #[test]
    fn edges_are_symmetric_and_inside() {
        let g = ball_graph(0);
        for u in (0..g.node_count()).step_by(97) {
            for e in g.edges(u) {
                let back = g.edges(e.to as usize);
                assert!(back.iter().any(|b| b.to as usize == u), "edge {u}->{} not symmetric", e.to);
                assert!(g.domain().segment_in_domain(
                    &g.nodes[u].coords,
                    &g.nodes[e.to as usize].coords,
                    0.0
                ));
            }
        }
    }

    #[test]
    fn node_density_tracks_clearance() {
        // at least a handful of neighbors in every ball B(x, d(x)/2)
        let g = ball_graph(0);
        let p = g.dom.norm().p();
        let dist = |a: &[f64], b: &[f64]| lp_dist(p, a, b);
        for u in (0..g.node_count()).step_by(53) {
            let node = &g.nodes[u];
            if node.clearance < g.floor_at(&node.coords) {
                continue;
            }
            let k = g.tree.within(&node.coords, node.clearance / 2.0, &dist).unwrap().len();
            assert!(k >= 12, "only {k} nodes near {:?}", node.coords);
        }
    }
}
