//! Event detectors on single configurations: rectangle crossings, two-point
//! connectivity, cluster sizes and connection to a ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Adjacency, Configuration, Geometry, Site};

/// A `width_sites x height_sites` block of window sites with its top-left corner at
/// `origin_offset`. Stands for the continuum rectangle of aspect ratio `W / H` at mesh `1 / H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectSpec {
    pub width_sites: usize,
    pub height_sites: usize,
    pub origin_offset: Site,
}

impl RectSpec {
    pub fn new(width_sites: usize, height_sites: usize, origin_offset: Site) -> Result<Self> {
        if width_sites < 2 || height_sites < 2 {
            return Err(Error::InvalidArgument(format!(
                "rectangle sides must be at least 2, got {width_sites}x{height_sites}"
            )));
        }
        Ok(RectSpec {
            width_sites,
            height_sites,
            origin_offset,
        })
    }

    /// `rho = W / H`.
    pub fn aspect_ratio(&self) -> f64 {
        self.width_sites as f64 / self.height_sites as f64
    }

    /// Mesh `delta = 1 / H`.
    pub fn mesh(&self) -> f64 {
        1.0 / self.height_sites as f64
    }

    pub fn check_fits(&self, g: &Geometry) -> Result<()> {
        let o = self.origin_offset;
        let fits = o.x >= 0
            && o.y >= 0
            && o.x as usize + self.width_sites <= g.width
            && o.y as usize + self.height_sites <= g.height;
        if fits {
            Ok(())
        } else {
            Err(Error::RectOutOfWindow {
                width: self.width_sites,
                height: self.height_sites,
                offset: o,
            })
        }
    }

    #[inline]
    fn contains(&self, s: Site) -> bool {
        let o = self.origin_offset;
        s.x >= o.x
            && s.y >= o.y
            && s.x < o.x + self.width_sites as i32
            && s.y < o.y + self.height_sites as i32
    }
}

/// Flood fill inside `rect` over sites in `target_open` state, seeded by `start`, reporting
/// whether some reached site satisfies `goal`.
fn rect_search(
    config: &Configuration,
    rect: &RectSpec,
    target_open: bool,
    adjacency: Adjacency,
    start: impl Iterator<Item = Site>,
    goal: impl Fn(Site) -> bool,
) -> bool {
    let g = config.geometry();
    let mut seen = vec![false; rect.width_sites * rect.height_sites];
    let local = |s: Site| {
        (s.y - rect.origin_offset.y) as usize * rect.width_sites + (s.x - rect.origin_offset.x) as usize
    };
    let mut stack = Vec::new();
    for s in start {
        if config.is_open(s) == target_open && !seen[local(s)] {
            seen[local(s)] = true;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        if goal(s) {
            return true;
        }
        for &(dx, dy) in adjacency.offsets() {
            let t = s.offset(dx, dy);
            if rect.contains(t) && g.contains(t) && !seen[local(t)] && config.is_open(t) == target_open {
                seen[local(t)] = true;
                stack.push(t);
            }
        }
    }
    false
}

/// Open *-path inside the rectangle from its top row to its bottom row.
pub fn open_star_crossing_vertical(config: &Configuration, rect: &RectSpec) -> Result<bool> {
    rect.check_fits(config.geometry())?;
    let o = rect.origin_offset;
    let bottom = o.y + rect.height_sites as i32 - 1;
    Ok(rect_search(
        config,
        rect,
        true,
        Adjacency::Star,
        (0..rect.width_sites as i32).map(|dx| o.offset(dx, 0)),
        |s| s.y == bottom,
    ))
}

/// Closed Z^2-path inside the rectangle from its left column to its right column.
pub fn closed_z2_crossing_horizontal(config: &Configuration, rect: &RectSpec) -> Result<bool> {
    rect.check_fits(config.geometry())?;
    let o = rect.origin_offset;
    let right = o.x + rect.width_sites as i32 - 1;
    Ok(rect_search(
        config,
        rect,
        false,
        Adjacency::Z2,
        (0..rect.height_sites as i32).map(|dy| o.offset(0, dy)),
        |s| s.x == right,
    ))
}

/// Flood fill from `start` over `target_open` sites, stopping early once `stop` holds.
/// Returns the number of sites visited and whether it stopped early.
fn cluster_search(
    config: &Configuration,
    start: Site,
    adjacency: Adjacency,
    target_open: bool,
    mut stop: impl FnMut(usize) -> bool,
) -> (usize, bool) {
    let g = config.geometry();
    if config.is_open(start) != target_open {
        return (0, false);
    }
    let mut seen = vec![false; g.len()];
    let s0 = g.index(start);
    seen[s0] = true;
    let mut stack = vec![s0];
    let mut count = 0;
    while let Some(i) = stack.pop() {
        count += 1;
        if stop(i) {
            return (count, true);
        }
        g.for_each_neighbor(i, adjacency, |j| {
            if let Some(j) = j {
                if !seen[j] && config.is_open_at(j) == target_open {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        });
    }
    (count, false)
}

/// Both sites are in `target_open` state and joined by a monochromatic path.
pub fn connected(config: &Configuration, a: Site, b: Site, adjacency: Adjacency, target_open: bool) -> Result<bool> {
    let g = config.geometry();
    g.check(a)?;
    g.check(b)?;
    if config.is_open(b) != target_open {
        return Ok(false);
    }
    let bi = g.index(b);
    Ok(cluster_search(config, a, adjacency, target_open, |i| i == bi).1)
}

/// Size of the `target_open` cluster containing `site`, 0 if the site has the other state.
pub fn cluster_size_at(config: &Configuration, site: Site, adjacency: Adjacency, target_open: bool) -> Result<usize> {
    config.geometry().check(site)?;
    Ok(cluster_search(config, site, adjacency, target_open, |_| false).0)
}

/// Whether `site` connects, inside the L-infinity ball of the given radius, to a site at
/// L-infinity distance exactly `radius`.
pub fn connected_to_ring(
    config: &Configuration,
    site: Site,
    radius: usize,
    adjacency: Adjacency,
    target_open: bool,
) -> Result<bool> {
    let g = config.geometry();
    let r = radius as i32;
    let fits = g.contains(site.offset(-r, -r)) && g.contains(site.offset(r, r));
    if !fits {
        return Err(Error::WindowTooSmall(format!(
            "ring of radius {radius} around {site} leaves the {}x{} window",
            g.width, g.height
        )));
    }
    if config.is_open(site) != target_open {
        return Ok(false);
    }
    if radius == 0 {
        return Ok(true);
    }
    let side = 2 * radius + 1;
    let mut seen = vec![false; side * side];
    let local = |s: Site| (s.y - site.y + r) as usize * side + (s.x - site.x + r) as usize;
    seen[local(site)] = true;
    let mut stack = vec![site];
    while let Some(s) = stack.pop() {
        if s.linf(site) == r {
            return Ok(true);
        }
        for &(dx, dy) in adjacency.offsets() {
            let t = s.offset(dx, dy);
            if t.linf(site) <= r && !seen[local(t)] && config.is_open(t) == target_open {
                seen[local(t)] = true;
                stack.push(t);
            }
        }
    }
    Ok(false)
}
