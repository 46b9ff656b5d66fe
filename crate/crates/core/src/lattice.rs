//! Sites, adjacencies, plaquettes, boundary conditions and Bernoulli sampling.
//!
//! A [`Configuration`] is a finite `width x height` window of Z^2 with a
//! boundary condition standing in for the rest of the lattice. Row `y = 0`
//! is the top row.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    #[inline]
    pub const fn offset(self, dx: i32, dy: i32) -> Self {
        Site {
            x: self.x + dx,
            y: self.y + dy,
        }
    }

    /// L-infinity distance, used for square windows and rings.
    #[inline]
    pub fn linf(self, other: Site) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Every out-of-window site is permanently open.
    OpenHalo,
    /// Every out-of-window site is permanently closed.
    ClosedHalo,
    /// Coordinates wrap modulo the window dimensions.
    Periodic,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 3] = [
        BoundaryCondition::OpenHalo,
        BoundaryCondition::ClosedHalo,
        BoundaryCondition::Periodic,
    ];

    /// Fixed state of halo sites (`true` = open), `None` when coordinates wrap.
    #[inline]
    pub fn halo_state(self) -> Option<bool> {
        match self {
            BoundaryCondition::OpenHalo => Some(true),
            BoundaryCondition::ClosedHalo => Some(false),
            BoundaryCondition::Periodic => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::OpenHalo => "open-halo",
            BoundaryCondition::ClosedHalo => "closed-halo",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open-halo" | "open" => Ok(BoundaryCondition::OpenHalo),
            "closed-halo" | "closed" => Ok(BoundaryCondition::ClosedHalo),
            "periodic" => Ok(BoundaryCondition::Periodic),
            other => Err(Error::Parse(format!("unknown boundary condition `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    /// Four orthogonal neighbors.
    Z2,
    /// Eight neighbors of the close-packed lattice.
    Star,
}

const Z2_OFFSETS: [(i32, i32); 4] = [(1, 0), (0, -1), (-1, 0), (0, 1)];
const STAR_OFFSETS: [(i32, i32); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

impl Adjacency {
    #[inline]
    pub fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Adjacency::Z2 => &Z2_OFFSETS,
            Adjacency::Star => &STAR_OFFSETS,
        }
    }
}

/// One entry of a neighbor list: either a window site or a halo site with its fixed state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Site(Site),
    Halo { open: bool },
}

/// Window shape and boundary condition, without states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub boundary: BoundaryCondition,
}

impl Geometry {
    pub fn new(width: usize, height: usize, boundary: BoundaryCondition) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        Ok(Geometry {
            width,
            height,
            boundary,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn contains(&self, site: Site) -> bool {
        site.x >= 0 && site.y >= 0 && (site.x as usize) < self.width && (site.y as usize) < self.height
    }

    pub fn check(&self, site: Site) -> Result<()> {
        if self.contains(site) {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                site,
                width: self.width,
                height: self.height,
            })
        }
    }

    #[inline]
    pub fn index(&self, site: Site) -> usize {
        debug_assert!(self.contains(site));
        site.y as usize * self.width + site.x as usize
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        Site::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// Central site of the window (rounded towards the top-left).
    #[inline]
    pub fn center(&self) -> Site {
        Site::new(((self.width - 1) / 2) as i32, ((self.height - 1) / 2) as i32)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// Maps a lattice position to a window site, or `None` when it falls in the halo.
    #[inline]
    pub fn resolve(&self, pos: Site) -> Option<Site> {
        if self.contains(pos) {
            return Some(pos);
        }
        match self.boundary {
            BoundaryCondition::Periodic => Some(Site::new(
                pos.x.rem_euclid(self.width as i32),
                pos.y.rem_euclid(self.height as i32),
            )),
            _ => None,
        }
    }

    /// Index of the neighbor of `index` at offset `(dx, dy)`, `None` if it is a halo site.
    #[inline]
    pub fn neighbor_index(&self, index: usize, dx: i32, dy: i32) -> Option<usize> {
        let x = (index % self.width) as i32;
        let y = (index / self.width) as i32;
        self.offset_index(x, y, dx, dy)
    }

    /// Calls `f` with the neighbor index (or `None` for a halo entry) of every offset of
    /// `adjacency`, in offset order. Cheaper than repeated [`Geometry::neighbor_index`].
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, adjacency: Adjacency, mut f: impl FnMut(Option<usize>)) {
        let x = (index % self.width) as i32;
        let y = (index / self.width) as i32;
        for &(dx, dy) in adjacency.offsets() {
            f(self.offset_index(x, y, dx, dy));
        }
    }

    /// Index of the site at `(x + dx, y + dy)`, `None` if it is a halo site.
    #[inline]
    pub fn offset_index(&self, x: i32, y: i32, dx: i32, dy: i32) -> Option<usize> {
        let (x, y) = (x + dx, y + dy);
        let (w, h) = (self.width as i32, self.height as i32);
        if x >= 0 && y >= 0 && x < w && y < h {
            return Some(y as usize * self.width + x as usize);
        }
        match self.boundary {
            BoundaryCondition::Periodic => {
                Some(y.rem_euclid(h) as usize * self.width + x.rem_euclid(w) as usize)
            }
            _ => None,
        }
    }

    /// Neighbor entries of `site` in offset order. Out-of-window positions come back as halo
    /// entries carrying the boundary state, or wrapped under [`BoundaryCondition::Periodic`].
    pub fn neighbors(&self, site: Site, adjacency: Adjacency) -> Vec<Neighbor> {
        adjacency
            .offsets()
            .iter()
            .map(|&(dx, dy)| match self.resolve(site.offset(dx, dy)) {
                Some(s) => Neighbor::Site(s),
                None => Neighbor::Halo {
                    open: self.boundary.halo_state().unwrap_or(false),
                },
            })
            .collect()
    }

    /// Plaquettes whose vertex set contains `site`: up to four, always four under `Periodic`.
    pub fn plaquettes_containing(&self, site: Site) -> Vec<Plaquette> {
        let mut out = Vec::with_capacity(4);
        for (dx, dy) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
            let corner = site.offset(dx, dy);
            let raw = [corner, corner.offset(1, 0), corner.offset(0, 1), corner.offset(1, 1)];
            let mut vertices = [site; 4];
            let mut ok = true;
            for (v, r) in vertices.iter_mut().zip(raw) {
                match self.resolve(r) {
                    Some(s) => *v = s,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                out.push(Plaquette { vertices });
            }
        }
        out
    }
}

/// Four sites at the corners of a unit square. `vertices[0]` is the corner with lowest
/// coordinates, followed by `+(1,0)`, `+(0,1)`, `+(1,1)` (wrapped under periodic boundaries).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Plaquette {
    pub vertices: [Site; 4],
}

impl Plaquette {
    #[inline]
    pub fn corner(&self) -> Site {
        self.vertices[0]
    }

    pub fn contains(&self, site: Site) -> bool {
        self.vertices.contains(&site)
    }
}

/// Disjoint plaquettes tiling an even window.
pub fn plaquette_partition(width: usize, height: usize) -> Result<Vec<Plaquette>> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::OddDimension { width, height });
    }
    let mut out = Vec::with_capacity(width * height / 4);
    for y in (0..height as i32).step_by(2) {
        for x in (0..width as i32).step_by(2) {
            let c = Site::new(x, y);
            out.push(Plaquette {
                vertices: [c, c.offset(1, 0), c.offset(0, 1), c.offset(1, 1)],
            });
        }
    }
    Ok(out)
}

/// Graph distance on Z^2 (L1 norm).
#[inline]
pub fn graph_distance(a: Site, b: Site) -> u32 {
    (a.x - b.x).unsigned_abs() + (a.y - b.y).unsigned_abs()
}

/// Euclidean norm of the displacement between two sites.
#[inline]
pub fn euclidean_distance(a: Site, b: Site) -> f64 {
    let dx = (a.x - b.x) as f64;
    let dy = (a.y - b.y) as f64;
    dx.hypot(dy)
}

/// A finite window of binary site states (`true` = open = 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    geometry: Geometry,
    states: Vec<bool>,
}

impl Configuration {
    pub fn from_states(geometry: Geometry, states: Vec<bool>) -> Result<Self> {
        if geometry.width == 0 || geometry.height == 0 {
            return Err(Error::ZeroDimension {
                width: geometry.width,
                height: geometry.height,
            });
        }
        if states.len() != geometry.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} states, got {}",
                geometry.len(),
                states.len()
            )));
        }
        Ok(Configuration { geometry, states })
    }

    pub fn filled(width: usize, height: usize, boundary: BoundaryCondition, open: bool) -> Result<Self> {
        let geometry = Geometry::new(width, height, boundary)?;
        Ok(Configuration {
            geometry,
            states: vec![open; geometry.len()],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        boundary: BoundaryCondition,
        mut f: impl FnMut(Site) -> bool,
    ) -> Result<Self> {
        let geometry = Geometry::new(width, height, boundary)?;
        let states = geometry.sites().map(&mut f).collect();
        Ok(Configuration { geometry, states })
    }

    /// Builds a window from the low `width * height` bits of `mask`, bit `i` = site index `i`.
    pub fn from_bits(width: usize, height: usize, boundary: BoundaryCondition, mask: u64) -> Result<Self> {
        let geometry = Geometry::new(width, height, boundary)?;
        if geometry.len() > 64 {
            return Err(Error::WindowTooSmall(format!(
                "bit mask holds 64 sites, window has {}",
                geometry.len()
            )));
        }
        let states = (0..geometry.len()).map(|i| mask >> i & 1 == 1).collect();
        Ok(Configuration { geometry, states })
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.geometry.width
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.geometry.height
    }
    #[inline]
    pub fn boundary(&self) -> BoundaryCondition {
        self.geometry.boundary
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn into_states(self) -> Vec<bool> {
        self.states
    }

    #[inline]
    pub fn is_open(&self, site: Site) -> bool {
        self.states[self.geometry.index(site)]
    }

    #[inline]
    pub fn is_open_at(&self, index: usize) -> bool {
        self.states[index]
    }

    #[inline]
    pub fn set(&mut self, site: Site, open: bool) {
        let i = self.geometry.index(site);
        self.states[i] = open;
    }

    pub fn count_open(&self) -> usize {
        self.states.iter().filter(|&&s| s).count()
    }

    /// Same states under a different boundary condition.
    pub fn with_boundary(&self, boundary: BoundaryCondition) -> Configuration {
        Configuration {
            geometry: Geometry {
                boundary,
                ..self.geometry
            },
            states: self.states.clone(),
        }
    }

    /// Open count among the entries of `neighbors(site, adjacency)`, halo entries included.
    pub fn open_neighbor_count(&self, site: Site, adjacency: Adjacency) -> usize {
        self.geometry
            .neighbors(site, adjacency)
            .into_iter()
            .filter(|n| match *n {
                Neighbor::Site(s) => self.is_open(s),
                Neighbor::Halo { open } => open,
            })
            .count()
    }

    /// Pointwise order: every site open here is open in `other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.states.len() == other.states.len()
            && self.states.iter().zip(&other.states).all(|(&a, &b)| !a || b)
    }

    /// Square sub-window of side `2 * radius + 1` centered on `center`, with a new boundary.
    /// Positions outside the parent are resolved through the parent's boundary; halo positions
    /// take the parent's halo state (closed under periodic parents that never produce them).
    pub fn window_around(&self, center: Site, radius: usize, boundary: BoundaryCondition) -> Configuration {
        let side = 2 * radius + 1;
        let r = radius as i32;
        let geometry = Geometry {
            width: side,
            height: side,
            boundary,
        };
        let states = geometry
            .sites()
            .map(|s| {
                let pos = center.offset(s.x - r, s.y - r);
                match self.geometry.resolve(pos) {
                    Some(p) => self.is_open(p),
                    None => self.geometry.boundary.halo_state().unwrap_or(false),
                }
            })
            .collect();
        Configuration { geometry, states }
    }

    /// Serializes to the textual grid format: `W H boundary`, then `H` rows of `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() + self.height() + 32);
        s.push_str(&format!("{} {} {}\n", self.width(), self.height(), self.boundary()));
        for row in self.states.chunks(self.width()) {
            for &open in row {
                s.push(if open { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let geometry = parse_header(lines.next())?;
        let mut states = Vec::with_capacity(geometry.len());
        for y in 0..geometry.height {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing grid row {y}")))?;
            if line.len() != geometry.width {
                return Err(Error::Parse(format!(
                    "row {y} has {} cells, expected {}",
                    line.len(),
                    geometry.width
                )));
            }
            for c in line.chars() {
                states.push(match c {
                    '1' => true,
                    '0' => false,
                    other => return Err(Error::Parse(format!("unexpected cell `{other}` in row {y}"))),
                });
            }
        }
        Configuration::from_states(geometry, states)
    }
}

pub(crate) fn parse_header(line: Option<&str>) -> Result<Geometry> {
    let line = line.ok_or_else(|| Error::Parse("empty input".into()))?;
    let mut parts = line.split_whitespace();
    let mut dim = |name: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let boundary: BoundaryCondition = parts
        .next()
        .ok_or_else(|| Error::Parse("missing boundary".into()))?
        .parse()?;
    Geometry::new(width, height, boundary)
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Configuration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Configuration::from_text(s)
    }
}

pub fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Bernoulli product sample: site `(x, y)` is open iff its counter-derived uniform is `< p`.
/// The result depends only on `(p, width, height, seed)`.
pub fn sample_configuration(
    p: f64,
    width: usize,
    height: usize,
    boundary: BoundaryCondition,
    seed: u64,
) -> Result<Configuration> {
    check_probability(p)?;
    let geometry = Geometry::new(width, height, boundary)?;
    let field = rng::SiteField::new(seed);
    let mut states = Vec::with_capacity(geometry.len());
    for y in 0..height as i32 {
        states.extend((0..width as i32).map(|x| field.bernoulli(x, y, p)));
    }
    Ok(Configuration { geometry, states })
}

/// Same field as [`sample_configuration`], filled row-parallel.
pub fn sample_configuration_par(
    p: f64,
    width: usize,
    height: usize,
    boundary: BoundaryCondition,
    seed: u64,
) -> Result<Configuration> {
    check_probability(p)?;
    let geometry = Geometry::new(width, height, boundary)?;
    let mut states = vec![false; geometry.len()];
    let field = rng::SiteField::new(seed);
    states.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, cell) in row.iter_mut().enumerate() {
            *cell = field.bernoulli(x as i32, y as i32, p);
        }
    });
    Ok(Configuration { geometry, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(w: usize, h: usize, b: BoundaryCondition) -> Geometry {
        Geometry::new(w, h, b).unwrap()
    }

    #[test]
    fn degenerate_samples() {
        for seed in 0..20 {
            let c = sample_configuration(0.0, 7, 5, BoundaryCondition::OpenHalo, seed).unwrap();
            assert_eq!(c.count_open(), 0);
            let c = sample_configuration(1.0, 7, 5, BoundaryCondition::OpenHalo, seed).unwrap();
            assert_eq!(c.count_open(), 35);
        }
    }

    #[test]
    fn sample_rejects_bad_input() {
        assert_eq!(
            sample_configuration(1.5, 4, 4, BoundaryCondition::Periodic, 0),
            Err(Error::InvalidProbability(1.5))
        );
        assert!(sample_configuration(-0.1, 4, 4, BoundaryCondition::Periodic, 0).is_err());
        assert!(matches!(
            sample_configuration(0.5, 0, 4, BoundaryCondition::Periodic, 0),
            Err(Error::ZeroDimension { .. })
        ));
    }

    #[test]
    fn sample_is_deterministic_and_near_half() {
        // 4/sqrt(4096) = 1/16 on the open fraction, i.e. 256 sites of 4096.
        let mut within = 0;
        for seed in 0..200u64 {
            let a = sample_configuration(0.5, 64, 64, BoundaryCondition::Periodic, seed).unwrap();
            let b = sample_configuration(0.5, 64, 64, BoundaryCondition::Periodic, seed).unwrap();
            assert_eq!(a, b);
            let frac = a.count_open() as f64 / 4096.0;
            if (frac - 0.5).abs() <= 4.0 / 64.0 {
                within += 1;
            }
        }
        assert!(within >= 198, "{within} of 200 seeds within bound");
    }

    #[test]
    fn parallel_sample_matches_serial() {
        let a = sample_configuration(0.37, 33, 17, BoundaryCondition::OpenHalo, 99).unwrap();
        let b = sample_configuration_par(0.37, 33, 17, BoundaryCondition::OpenHalo, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neighbor_counts() {
        let g = geom(8, 8, BoundaryCondition::OpenHalo);
        let n = g.neighbors(Site::new(3, 3), Adjacency::Z2);
        assert_eq!(n.iter().filter(|e| matches!(e, Neighbor::Site(_))).count(), 4);

        let g = geom(8, 8, BoundaryCondition::Periodic);
        let n = g.neighbors(Site::new(0, 0), Adjacency::Star);
        assert_eq!(n.len(), 8);
        assert!(n.iter().all(|e| matches!(e, Neighbor::Site(_))));

        let g = geom(8, 8, BoundaryCondition::OpenHalo);
        let n = g.neighbors(Site::new(0, 0), Adjacency::Z2);
        assert_eq!(n.iter().filter(|e| matches!(e, Neighbor::Site(_))).count(), 2);
        assert_eq!(n.iter().filter(|e| **e == Neighbor::Halo { open: true }).count(), 2);

        let g = geom(8, 8, BoundaryCondition::ClosedHalo);
        let n = g.neighbors(Site::new(0, 7), Adjacency::Star);
        assert_eq!(n.iter().filter(|e| **e == Neighbor::Halo { open: false }).count(), 5);
    }

    #[test]
    fn neighbor_symmetry_exhaustive() {
        for b in BoundaryCondition::ALL {
            for (w, h) in [(1, 1), (2, 3), (3, 3), (5, 4)] {
                let g = geom(w, h, b);
                for adj in [Adjacency::Z2, Adjacency::Star] {
                    for a in g.sites() {
                        for n in g.neighbors(a, adj) {
                            if let Neighbor::Site(s) = n {
                                assert!(g.neighbors(s, adj).contains(&Neighbor::Site(a)));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn plaquettes_containing_counts() {
        let g = geom(6, 6, BoundaryCondition::OpenHalo);
        assert_eq!(g.plaquettes_containing(Site::new(2, 3)).len(), 4);
        assert_eq!(g.plaquettes_containing(Site::new(0, 0)).len(), 1);
        assert_eq!(g.plaquettes_containing(Site::new(0, 3)).len(), 2);
        let g = geom(6, 6, BoundaryCondition::Periodic);
        assert_eq!(g.plaquettes_containing(Site::new(0, 0)).len(), 4);
        for s in g.sites() {
            for pq in g.plaquettes_containing(s) {
                assert!(pq.contains(s));
            }
        }
    }

    #[test]
    fn partition_covers_each_site_once() {
        for (w, h) in [(2, 2), (4, 4), (6, 4), (8, 2)] {
            let parts = plaquette_partition(w, h).unwrap();
            assert_eq!(parts.len(), w * h / 4);
            let mut seen = vec![0; w * h];
            for pq in &parts {
                for v in pq.vertices {
                    seen[v.y as usize * w + v.x as usize] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
        assert_eq!(
            plaquette_partition(5, 4),
            Err(Error::OddDimension { width: 5, height: 4 })
        );
    }

    #[test]
    fn distances() {
        let o = Site::new(0, 0);
        assert_eq!(graph_distance(o, o), 0);
        assert_eq!(graph_distance(o, Site::new(1, 0)), 1);
        assert_eq!(graph_distance(o, Site::new(2, 3)), 5);
    }

    #[test]
    fn text_format_example() {
        let c = Configuration::from_fn(3, 2, BoundaryCondition::ClosedHalo, |s| s.x == s.y).unwrap();
        assert_eq!(c.to_text(), "3 2 closed-halo\n100\n010\n");
        assert_eq!(Configuration::from_text(&c.to_text()).unwrap(), c);
        assert!(Configuration::from_text("3 2 periodic\n101\n").is_err());
        assert!(Configuration::from_text("3 1 periodic\n1x1\n").is_err());
        assert!(Configuration::from_text("3 1 toroidal\n101\n").is_err());
    }

    #[test]
    fn window_around_extracts_and_wraps() {
        let c = Configuration::from_fn(5, 5, BoundaryCondition::Periodic, |s| s.x == 0).unwrap();
        let w = c.window_around(Site::new(4, 2), 1, BoundaryCondition::OpenHalo);
        // columns 3, 4, 0 of the parent
        assert_eq!(w.to_text(), "3 3 open-halo\n001\n001\n001\n");
        let c = c.with_boundary(BoundaryCondition::OpenHalo);
        let w = c.window_around(Site::new(4, 2), 1, BoundaryCondition::ClosedHalo);
        assert_eq!(w.to_text(), "3 3 closed-halo\n001\n001\n001\n");
    }

    proptest! {
        #[test]
        fn text_round_trip(w in 1usize..9, h in 1usize..9, seed: u64, b in 0usize..3) {
            let c = sample_configuration(0.5, w, h, BoundaryCondition::ALL[b], seed).unwrap();
            prop_assert_eq!(Configuration::from_text(&c.to_text()).unwrap(), c);
        }

        #[test]
        fn distance_is_a_metric(ax in -50i32..50, ay in -50i32..50, bx in -50i32..50,
                                by in -50i32..50, cx in -50i32..50, cy in -50i32..50) {
            let (a, b, c) = (Site::new(ax, ay), Site::new(bx, by), Site::new(cx, cy));
            prop_assert!(graph_distance(a, c) <= graph_distance(a, b) + graph_distance(b, c));
            prop_assert_eq!(graph_distance(a, b) == 0, a == b);
            prop_assert_eq!(graph_distance(a, b), graph_distance(b, a));
        }
    }
}
