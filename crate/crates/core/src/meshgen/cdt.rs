//! Incremental constrained Delaunay triangulation with Ruppert refinement.
//!
//! Vertices are inserted with Bowyer-Watson cavities that never cross a
//! constrained edge. Missing input segments are recovered by bisection
//! (conforming recovery), then bad triangles are removed by inserting
//! circumcenters, splitting any subsegment a circumcenter would encroach.

use super::size_field::SizeFunction;
use super::MeshError;
use crate::geometry::{circumcircle, dot, incircle, orient, sub, triangle_angles, Point};
use std::collections::{HashMap, HashSet, VecDeque};

type Vid = u32;
type Tid = u32;

#[derive(Debug, Clone, Copy)]
enum Location {
    Inside(Tid),
    Vertex(Vid),
    Outside,
}

#[derive(Debug, Clone, Copy)]
pub(super) struct RefineParams {
    pub min_angle_rad: f64,
    pub max_triangles: usize,
}

pub(super) struct Cdt {
    pts: Vec<Point>,
    tris: Vec<[Vid; 3]>,
    alive: Vec<bool>,
    /// Region flag, meaningful once segments are recovered.
    outside: Vec<bool>,
    /// Directed edge -> triangle holding it counter-clockwise.
    edges: HashMap<(Vid, Vid), Tid>,
    segments: Vec<(Vid, Vid)>,
    segment_alive: Vec<bool>,
    segment_index: HashMap<(Vid, Vid), usize>,
    input_vertex: Vec<bool>,
    last: Tid,
    n_alive: usize,
}

fn key(a: Vid, b: Vid) -> (Vid, Vid) {
    (a.min(b), a.max(b))
}

impl Cdt {
    /// Starts from the two triangles of an axis-aligned rectangle.
    pub fn new(corners: [Point; 4]) -> Self {
        let mut cdt = Self {
            pts: corners.to_vec(),
            tris: Vec::new(),
            alive: Vec::new(),
            outside: Vec::new(),
            edges: HashMap::new(),
            segments: Vec::new(),
            segment_alive: Vec::new(),
            segment_index: HashMap::new(),
            input_vertex: vec![true; 4],
            last: 0,
            n_alive: 0,
        };
        cdt.add_triangle([0, 1, 2], true);
        cdt.add_triangle([0, 2, 3], true);
        cdt
    }

    pub fn vertices(&self) -> &[Point] {
        &self.pts
    }

    pub fn live_triangle_count(&self) -> usize {
        self.n_alive
    }

    /// Live triangles outside all buildings.
    pub fn outside_triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.tris.len())
            .filter(|&t| self.alive[t] && self.outside[t])
            .map(|t| self.tris[t].map(|v| v as usize))
    }

    fn add_triangle(&mut self, v: [Vid; 3], outside: bool) -> Tid {
        let t = self.tris.len() as Tid;
        self.tris.push(v);
        self.alive.push(true);
        self.outside.push(outside);
        for k in 0..3 {
            self.edges.insert((v[k], v[(k + 1) % 3]), t);
        }
        self.n_alive += 1;
        self.last = t;
        t
    }

    fn kill_triangle(&mut self, t: Tid) {
        let v = self.tris[t as usize];
        for k in 0..3 {
            if self.edges.get(&(v[k], v[(k + 1) % 3])) == Some(&t) {
                self.edges.remove(&(v[k], v[(k + 1) % 3]));
            }
        }
        self.alive[t as usize] = false;
        self.n_alive -= 1;
    }

    fn p(&self, v: Vid) -> Point {
        self.pts[v as usize]
    }

    fn is_constrained(&self, a: Vid, b: Vid) -> bool {
        self.segment_index.contains_key(&key(a, b))
    }

    fn locate(&self, p: Point, start: Tid) -> Location {
        let mut t = if self.alive[start as usize] { start } else { self.last };
        if !self.alive[t as usize] {
            return self.locate_brute(p);
        }
        let max_steps = 4 * self.tris.len() + 64;
        for step in 0..max_steps {
            let v = self.tris[t as usize];
            let mut next = None;
            for k in 0..3 {
                let i = (k + step) % 3;
                let (a, b) = (v[i], v[(i + 1) % 3]);
                if orient(self.p(a), self.p(b), p) < 0.0 {
                    next = Some(self.edges.get(&(b, a)).copied());
                    break;
                }
            }
            match next {
                None => {
                    if let Some(&w) = v.iter().find(|&&w| self.p(w) == p) {
                        return Location::Vertex(w);
                    }
                    return Location::Inside(t);
                }
                Some(Some(n)) => t = n,
                Some(None) => return Location::Outside,
            }
        }
        self.locate_brute(p)
    }

    fn locate_brute(&self, p: Point) -> Location {
        for (t, v) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            if (0..3).all(|k| orient(self.p(v[k]), self.p(v[(k + 1) % 3]), p) >= 0.0) {
                if let Some(&w) = v.iter().find(|&&w| self.p(w) == p) {
                    return Location::Vertex(w);
                }
                return Location::Inside(t as Tid);
            }
        }
        Location::Outside
    }

    /// Inserts `p`, returning its vertex id and the triangles created.
    /// An existing vertex at exactly `p` is returned with no new triangles.
    fn insert(&mut self, p: Point, start: Tid) -> Result<(Vid, Vec<Tid>), MeshError> {
        let t0 = match self.locate(p, start) {
            Location::Vertex(v) => return Ok((v, Vec::new())),
            Location::Outside => return Err(MeshError::Internal(format!("point {p:?} outside triangulation"))),
            Location::Inside(t) => t,
        };

        let mut cavity = vec![t0];
        let mut in_cavity: HashSet<Tid> = HashSet::from([t0]);
        let mut i = 0;
        while i < cavity.len() {
            let c = cavity[i];
            i += 1;
            let v = self.tris[c as usize];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                if self.is_constrained(a, b) {
                    continue;
                }
                if let Some(&n) = self.edges.get(&(b, a)) {
                    if in_cavity.contains(&n) {
                        continue;
                    }
                    let w = self.tris[n as usize];
                    if incircle(self.p(w[0]), self.p(w[1]), self.p(w[2]), p) > 0.0 {
                        in_cavity.insert(n);
                        cavity.push(n);
                    }
                }
            }
        }

        let mut boundary = Vec::new();
        for &c in &cavity {
            let v = self.tris[c as usize];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let inner = self.edges.get(&(b, a)).is_some_and(|n| in_cavity.contains(n));
                if !inner {
                    boundary.push((a, b, self.outside[c as usize]));
                }
            }
        }

        for &(a, b, _) in &boundary {
            let o = orient(self.p(a), self.p(b), p);
            if o < 0.0 {
                return Err(MeshError::Internal(format!("cavity for {p:?} is not star-shaped")));
            }
        }

        let v = self.pts.len() as Vid;
        self.pts.push(p);
        self.input_vertex.push(false);
        for &c in &cavity {
            self.kill_triangle(c);
        }
        let mut created = Vec::with_capacity(boundary.len());
        for (a, b, outside) in boundary {
            // p on a hull edge: the edge is split rather than triangulated.
            if orient(self.p(a), self.p(b), p) == 0.0 {
                continue;
            }
            created.push(self.add_triangle([a, b, v], outside));
        }
        Ok((v, created))
    }

    pub fn insert_input_vertex(&mut self, p: Point) -> Result<Vid, MeshError> {
        let (v, _) = self.insert(p, self.last)?;
        self.input_vertex[v as usize] = true;
        Ok(v)
    }

    fn add_segment(&mut self, a: Vid, b: Vid) -> usize {
        let s = self.segments.len();
        self.segments.push((a, b));
        self.segment_alive.push(true);
        self.segment_index.insert(key(a, b), s);
        s
    }

    fn remove_segment(&mut self, s: usize) {
        let (a, b) = self.segments[s];
        self.segment_alive[s] = false;
        self.segment_index.remove(&key(a, b));
    }

    fn has_edge(&self, a: Vid, b: Vid) -> bool {
        self.edges.contains_key(&(a, b)) || self.edges.contains_key(&(b, a))
    }

    /// Split point of a subsegment: the midpoint, or a power-of-two distance
    /// from an input vertex when exactly one endpoint is one (concentric
    /// shells, keeps small input angles from cascading).
    fn split_point(&self, a: Vid, b: Vid) -> Point {
        let (pa, pb) = (self.p(a), self.p(b));
        let (from, to) = match (self.input_vertex[a as usize], self.input_vertex[b as usize]) {
            (true, false) => (pa, pb),
            (false, true) => (pb, pa),
            _ => return [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
        };
        let len = (to[0] - from[0]).hypot(to[1] - from[1]);
        let shell = 2f64.powf((0.5 * len).log2().round());
        let t = (shell / len).clamp(0.25, 0.75);
        [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
    }

    /// Inserts all input segments, bisecting those missing from the
    /// triangulation until every piece is an edge.
    pub fn recover_segments(&mut self, input: &[(Vid, Vid)], budget: usize) -> Result<(), MeshError> {
        let mut queue: VecDeque<(Vid, Vid)> = input.iter().copied().collect();
        while let Some((a, b)) = queue.pop_front() {
            if self.n_alive > budget {
                return Err(MeshError::BudgetExceeded { limit: budget });
            }
            if self.has_edge(a, b) {
                if !self.is_constrained(a, b) {
                    self.add_segment(a, b);
                }
                continue;
            }
            let m = self.split_point(a, b);
            let start = self.last;
            let (v, created) = self.insert(m, start)?;
            if created.is_empty() {
                return Err(MeshError::Internal(format!("segment split point {m:?} coincides with a vertex")));
            }
            queue.push_back((a, v));
            queue.push_back((v, b));
        }
        Ok(())
    }

    /// Flags triangles reachable from the hull without crossing a segment
    /// as outside; everything else lies inside a building.
    pub fn classify_regions(&mut self) {
        self.outside.iter_mut().for_each(|o| *o = false);
        let mut stack: Vec<Tid> = Vec::new();
        for t in 0..self.tris.len() {
            if !self.alive[t] {
                continue;
            }
            let v = self.tris[t];
            if (0..3).any(|k| !self.edges.contains_key(&(v[(k + 1) % 3], v[k]))) {
                self.outside[t] = true;
                stack.push(t as Tid);
            }
        }
        while let Some(t) = stack.pop() {
            let v = self.tris[t as usize];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                if self.is_constrained(a, b) {
                    continue;
                }
                if let Some(&n) = self.edges.get(&(b, a)) {
                    if !self.outside[n as usize] {
                        self.outside[n as usize] = true;
                        stack.push(n);
                    }
                }
            }
        }
    }

    fn apexes(&self, a: Vid, b: Vid) -> impl Iterator<Item = (Tid, Vid)> + '_ {
        [(a, b), (b, a)].into_iter().filter_map(move |e| {
            let t = *self.edges.get(&e)?;
            let v = self.tris[t as usize];
            let apex = v.into_iter().find(|&w| w != a && w != b)?;
            Some((t, apex))
        })
    }

    fn encroaches(&self, s: usize, q: Point) -> bool {
        let (a, b) = self.segments[s];
        dot(sub(self.p(a), q), sub(self.p(b), q)) < 0.0
    }

    fn segment_encroached(&self, s: usize) -> bool {
        let (a, b) = self.segments[s];
        if !self.has_edge(a, b) {
            return true;
        }
        self.apexes(a, b)
            .any(|(t, w)| self.outside[t as usize] && self.encroaches(s, self.p(w)))
    }

    fn split_segment(&mut self, s: usize, segq: &mut VecDeque<usize>, triq: &mut VecDeque<Tid>) -> Result<(), MeshError> {
        let (a, b) = self.segments[s];
        let start = self
            .edges
            .get(&(a, b))
            .or_else(|| self.edges.get(&(b, a)))
            .copied()
            .unwrap_or(self.last);
        let m = self.split_point(a, b);
        self.remove_segment(s);
        let (v, created) = self.insert(m, start)?;
        if created.is_empty() {
            return Err(MeshError::Internal(format!("segment split point {m:?} coincides with a vertex")));
        }
        segq.push_back(self.add_segment(a, v));
        segq.push_back(self.add_segment(v, b));
        self.queue_around(&created, segq, triq);
        Ok(())
    }

    fn queue_around(&self, created: &[Tid], segq: &mut VecDeque<usize>, triq: &mut VecDeque<Tid>) {
        for &t in created {
            triq.push_back(t);
            let v = self.tris[t as usize];
            for k in 0..3 {
                if let Some(&s) = self.segment_index.get(&key(v[k], v[(k + 1) % 3])) {
                    segq.push_back(s);
                }
            }
        }
    }

    fn is_bad(&self, t: Tid, size: &SizeFunction, params: &RefineParams) -> bool {
        let v = self.tris[t as usize];
        let [a, b, c] = v.map(|w| self.p(w));
        let (_, r) = circumcircle(a, b, c);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        if r > size.at(centroid) {
            return true;
        }
        let angles = triangle_angles(a, b, c);
        let (k, &smallest) = angles
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap();
        if smallest >= params.min_angle_rad {
            return false;
        }
        // A sliver wedged into a sharp input corner cannot be improved.
        let (prev, next) = (v[(k + 2) % 3], v[(k + 1) % 3]);
        !(self.is_constrained(v[k], prev) && self.is_constrained(v[k], next))
    }

    pub fn refine(&mut self, size: &SizeFunction, params: RefineParams) -> Result<(), MeshError> {
        let mut segq: VecDeque<usize> = (0..self.segments.len()).filter(|&s| self.segment_alive[s]).collect();
        let mut triq: VecDeque<Tid> = (0..self.tris.len() as Tid)
            .filter(|&t| self.alive[t as usize] && self.outside[t as usize])
            .collect();

        loop {
            if self.n_alive > params.max_triangles {
                return Err(MeshError::BudgetExceeded {
                    limit: params.max_triangles,
                });
            }
            if let Some(s) = segq.pop_front() {
                if self.segment_alive[s] && self.segment_encroached(s) {
                    self.split_segment(s, &mut segq, &mut triq)?;
                }
                continue;
            }
            let Some(t) = triq.pop_front() else { break };
            if !self.alive[t as usize] || !self.outside[t as usize] || !self.is_bad(t, size, &params) {
                continue;
            }
            let [a, b, c] = self.tris[t as usize].map(|w| self.p(w));
            let (center, _) = circumcircle(a, b, c);
            let encroached: Vec<usize> = (0..self.segments.len())
                .filter(|&s| self.segment_alive[s] && self.encroaches(s, center))
                .collect();
            if !encroached.is_empty() {
                for s in encroached {
                    if self.segment_alive[s] {
                        self.split_segment(s, &mut segq, &mut triq)?;
                    }
                }
                if self.alive[t as usize] {
                    triq.push_back(t);
                }
                continue;
            }
            match self.locate(center, t) {
                Location::Inside(host) if self.outside[host as usize] => {
                    let (_, created) = self.insert(center, host)?;
                    self.queue_around(&created, &mut segq, &mut triq);
                }
                _ => log::debug!("skipping circumcenter {center:?} of triangle {t}"),
            }
        }
        Ok(())
    }
}
