//! The threshold-3 bootstrap rule: synchronous steps, evolution to the fixed point,
//! flip-time accounting and window-determinacy tests.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{parse_header, Adjacency, BoundaryCondition, Configuration, Site};

/// Update rule: a closed site opens when at least `threshold` of its four Z^2-neighbor
/// entries are open. The model uses 3; other values exist for mutation testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rule {
    pub threshold: u8,
}

impl Rule {
    pub const BOOTSTRAP: Rule = Rule { threshold: 3 };
}

impl Default for Rule {
    fn default() -> Self {
        Rule::BOOTSTRAP
    }
}

/// Time at which a site switched from closed to open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlipTime {
    /// Open at time 0.
    InitiallyOpen,
    /// Closed in `omega_{t-1}` and open in `omega_t`.
    At(u32),
    /// Closed in the fixed point.
    Never,
}

impl FlipTime {
    #[inline]
    pub fn time(self) -> Option<u32> {
        match self {
            FlipTime::At(t) => Some(t),
            _ => None,
        }
    }

    #[inline]
    pub fn is_never(self) -> bool {
        self == FlipTime::Never
    }

    /// The site does flip, strictly after time `n`.
    #[inline]
    pub fn flips_after(self, n: u32) -> bool {
        matches!(self, FlipTime::At(t) if t > n)
    }

    /// State at time `n`.
    #[inline]
    pub fn open_at(self, n: u32) -> bool {
        match self {
            FlipTime::InitiallyOpen => true,
            FlipTime::At(t) => t <= n,
            FlipTime::Never => false,
        }
    }
}

impl fmt::Display for FlipTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlipTime::InitiallyOpen => f.write_str("*"),
            FlipTime::At(t) => write!(f, "{t}"),
            FlipTime::Never => f.write_str("-"),
        }
    }
}

impl std::str::FromStr for FlipTime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "*" => Ok(FlipTime::InitiallyOpen),
            "-" => Ok(FlipTime::Never),
            t => match t.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(FlipTime::At(v)),
                _ => Err(Error::Parse(format!("bad flip time `{t}`"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipTimeField {
    width: usize,
    height: usize,
    times: Vec<FlipTime>,
}

impl FlipTimeField {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn get(&self, site: Site) -> FlipTime {
        self.times[site.y as usize * self.width + site.x as usize]
    }
    #[inline]
    pub fn at_index(&self, index: usize) -> FlipTime {
        self.times[index]
    }
    pub fn as_slice(&self) -> &[FlipTime] {
        &self.times
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionResult {
    pub final_config: Configuration,
    pub stabilization_time: u32,
    pub flip_times: FlipTimeField,
}

impl EvolutionResult {
    /// Grid format of the final configuration followed by the flip-time grid:
    /// one row per line, space-separated, `*` for initially open and `-` for never.
    pub fn to_text(&self) -> String {
        let mut s = self.final_config.to_text();
        for row in self.flip_times.times.chunks(self.flip_times.width) {
            let line: Vec<String> = row.iter().map(|t| t.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let geometry = parse_header(lines.first().copied())?;
        let h = geometry.height;
        if lines.len() < 1 + 2 * h {
            return Err(Error::Parse("truncated evolution result".into()));
        }
        let final_config = Configuration::from_text(&lines[..=h].join("\n"))?;
        let mut times = Vec::with_capacity(geometry.len());
        for line in &lines[1 + h..1 + 2 * h] {
            let row: Vec<FlipTime> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_>>()?;
            if row.len() != geometry.width {
                return Err(Error::Parse("flip-time row has wrong length".into()));
            }
            times.extend(row);
        }
        let stabilization_time = times.iter().filter_map(|t| t.time()).max().unwrap_or(0);
        Ok(EvolutionResult {
            final_config,
            stabilization_time,
            flip_times: FlipTimeField {
                width: geometry.width,
                height: geometry.height,
                times,
            },
        })
    }
}

/// Number of open entries among the four Z^2 neighbor entries of site `i`.
#[inline]
fn open_count(config: &Configuration, i: usize, halo_open: bool) -> u8 {
    let g = config.geometry();
    let mut c = 0;
    g.for_each_neighbor(i, Adjacency::Z2, |j| {
        c += match j {
            Some(j) => config.is_open_at(j),
            None => halo_open,
        } as u8;
    });
    c
}

#[inline]
fn halo_open(boundary: BoundaryCondition) -> bool {
    boundary.halo_state().unwrap_or(false)
}

/// One synchronous update. Returns the new configuration and the number of sites that flipped.
pub fn step(config: &Configuration) -> (Configuration, usize) {
    step_with_rule(config, Rule::BOOTSTRAP)
}

pub fn step_with_rule(config: &Configuration, rule: Rule) -> (Configuration, usize) {
    let halo = halo_open(config.boundary());
    let mut states = config.states().to_vec();
    let mut flipped = 0;
    for (i, s) in states.iter_mut().enumerate() {
        if !*s && open_count(config, i, halo) >= rule.threshold {
            *s = true;
            flipped += 1;
        }
    }
    let next = Configuration::from_states(*config.geometry(), states).expect("same geometry");
    (next, flipped)
}

/// `n` synchronous updates.
pub fn evolve(config: &Configuration, n: u32) -> Configuration {
    run(config, Rule::BOOTSTRAP, Some(n)).final_config
}

/// Iterates the rule until nothing flips. Terminates after at most `width * height` steps.
pub fn fixed_point(config: &Configuration) -> EvolutionResult {
    run(config, Rule::BOOTSTRAP, None)
}

pub fn fixed_point_with_rule(config: &Configuration, rule: Rule) -> EvolutionResult {
    run(config, rule, None)
}

/// Evolves to time `n` (or to the fixed point for `None`), recording flip times.
///
/// Frontier form of the synchronous rule: only sites next to a site that flipped in
/// round `t - 1` can flip in round `t`, so each round scans its frontier only.
pub fn run(config: &Configuration, rule: Rule, horizon: Option<u32>) -> EvolutionResult {
    let g = *config.geometry();
    let halo = halo_open(g.boundary);
    let n = g.len();
    let mut open = config.states().to_vec();
    let mut count = vec![0u8; n];
    // neighbor counts row by row, written so the inner loops vectorize
    let (w, h) = (g.width, g.height);
    let periodic = g.boundary == BoundaryCondition::Periodic;
    let row = |y: isize| -> Option<usize> {
        match y {
            y if y >= 0 && (y as usize) < h => Some(y as usize),
            _ if periodic => Some(y.rem_euclid(h as isize) as usize),
            _ => None,
        }
    };
    let halo_row = vec![halo; w];
    for y in 0..h {
        let vertical = |r: Option<usize>| r.map_or(&halo_row[..], |r| &open[r * w..(r + 1) * w]);
        let (up, down) = (vertical(row(y as isize - 1)), vertical(row(y as isize + 1)));
        let cur = &open[y * w..(y + 1) * w];
        let out = &mut count[y * w..(y + 1) * w];
        for x in 0..w {
            out[x] = up[x] as u8 + down[x] as u8;
        }
        for x in 1..w {
            out[x] += cur[x - 1] as u8;
            out[x - 1] += cur[x] as u8;
        }
        let (first, last) = if periodic { (cur[w - 1], cur[0]) } else { (halo, halo) };
        out[0] += first as u8;
        out[w - 1] += last as u8;
    }
    let mut times: Vec<FlipTime> = open
        .iter()
        .map(|&o| if o { FlipTime::InitiallyOpen } else { FlipTime::Never })
        .collect();
    let mut frontier = Vec::new();
    for (i, (&o, &c)) in open.iter().zip(&count).enumerate() {
        if !o & (c >= rule.threshold) {
            frontier.push(i);
        }
    }

    // round at which a site was last queued, to dedupe the next frontier
    let mut queued = vec![0u32; n];
    let mut t = 0u32;
    while !frontier.is_empty() && horizon.is_none_or(|h| t < h) {
        t += 1;
        for &i in &frontier {
            open[i] = true;
            times[i] = FlipTime::At(t);
        }
        let mut next = Vec::new();
        let mut bump = |j: usize| {
            count[j] += 1;
            if !open[j] && count[j] >= rule.threshold && queued[j] != t {
                queued[j] = t;
                next.push(j);
            }
        };
        for &i in &frontier {
            let (x, y) = (i % w, i / w);
            if x > 0 && y > 0 && x + 1 < w && y + 1 < h {
                for j in [i + 1, i - w, i - 1, i + w] {
                    bump(j);
                }
            } else {
                g.for_each_neighbor(i, Adjacency::Z2, |j| {
                    if let Some(j) = j {
                        bump(j);
                    }
                });
            }
        }
        frontier = next;
    }
    let stabilization_time = t;
    let final_config = Configuration::from_states(g, open).expect("same geometry");
    EvolutionResult {
        final_config,
        stabilization_time,
        flip_times: FlipTimeField {
            width: g.width,
            height: g.height,
            times,
        },
    }
}

/// Configuration at time `n`, or at the fixed point when `n` is `None`.
pub fn evolve_to(config: &Configuration, horizon: Option<u32>) -> Configuration {
    run(config, Rule::BOOTSTRAP, horizon).final_config
}

/// Whether the fixed-point state of `site` is the same with an all-open halo and with an
/// all-closed halo around the window. By monotonicity these two completions bracket every
/// other one, so agreement means the window alone determines the final state.
pub fn determined_by_window(window: &Configuration, site: Site) -> Result<bool> {
    window.geometry().check(site)?;
    if window.is_open(site) {
        return Ok(true);
    }
    let open = fixed_point(&window.with_boundary(BoundaryCondition::OpenHalo));
    let closed = fixed_point(&window.with_boundary(BoundaryCondition::ClosedHalo));
    Ok(open.final_config.is_open(site) == closed.final_config.is_open(site))
}

/// L1 radius of the window that reproduces a site's trajectory up to time `n` for any halo.
#[inline]
pub fn light_cone_radius(n: u32) -> u32 {
    n + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_configuration;
    use BoundaryCondition::*;

    fn sea_with(w: usize, h: usize, b: BoundaryCondition, closed: &[(i32, i32)]) -> Configuration {
        Configuration::from_fn(w, h, b, |s| !closed.contains(&(s.x, s.y))).unwrap()
    }

    #[test]
    fn open_sites_are_stable() {
        let c = Configuration::filled(6, 5, ClosedHalo, true).unwrap();
        let (next, k) = step(&c);
        assert_eq!(next, c);
        assert_eq!(k, 0);
    }

    #[test]
    fn isolated_closed_site_flips() {
        let c = sea_with(5, 5, OpenHalo, &[(2, 2)]);
        let (next, k) = step(&c);
        assert_eq!(k, 1);
        assert!(next.is_open(Site::new(2, 2)));
    }

    #[test]
    fn closed_plaquette_is_protected() {
        let c = sea_with(6, 6, OpenHalo, &[(2, 2), (3, 2), (2, 3), (3, 3)]);
        let (next, k) = step(&c);
        assert_eq!(k, 0);
        assert_eq!(next, c);
        let r = fixed_point(&c);
        assert_eq!(r.stabilization_time, 0);
        assert_eq!(r.final_config, c);
    }

    #[test]
    fn segment_of_five_erodes_from_both_ends() {
        let seg: Vec<(i32, i32)> = (2..7).map(|x| (x, 3)).collect();
        let c = sea_with(9, 7, OpenHalo, &seg);
        let (c1, k) = step(&c);
        assert_eq!(k, 2);
        assert_eq!(c1.len() - c1.count_open(), 3);
        let r = fixed_point(&c);
        assert_eq!(r.stabilization_time, 3);
        assert_eq!(r.final_config.count_open(), r.final_config.len());
        let t: Vec<u32> = (2..7).map(|x| r.flip_times.get(Site::new(x, 3)).time().unwrap()).collect();
        assert_eq!(t, vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn segment_stabilizes_in_half_length() {
        for len in 1..=8i32 {
            let seg: Vec<(i32, i32)> = (2..2 + len).map(|x| (x, 2)).collect();
            let c = sea_with(12, 5, OpenHalo, &seg);
            let r = fixed_point(&c);
            assert_eq!(r.stabilization_time, (len as u32).div_ceil(2), "len {len}");
        }
    }

    #[test]
    fn evolve_zero_is_identity_and_all_closed_stays() {
        let c = sample_configuration(0.4, 9, 9, OpenHalo, 3).unwrap();
        assert_eq!(evolve(&c, 0), c);
        for b in [ClosedHalo, Periodic] {
            let c = Configuration::filled(5, 4, b, false).unwrap();
            assert_eq!(evolve(&c, 7), c);
            assert_eq!(fixed_point(&c).stabilization_time, 0);
        }
    }

    #[test]
    fn frontier_run_matches_iterated_steps() {
        for seed in 0..300u64 {
            let b = BoundaryCondition::ALL[seed as usize % 3];
            let p = 0.1 + 0.8 * (seed % 9) as f64 / 8.0;
            let c = sample_configuration(p, 11, 9, b, seed).unwrap();
            let mut cur = c.clone();
            for n in 0..12u32 {
                assert_eq!(evolve(&c, n), cur, "seed {seed} n {n}");
                cur = step(&cur).0;
            }
        }
    }

    #[test]
    fn monotone_in_initial_data_exhaustive_3x3() {
        // all pairs c <= c' ordered by inclusion: c' = c | extra
        for b in BoundaryCondition::ALL {
            let finals: Vec<Configuration> = (0u64..512)
                .map(|m| {
                    let c = Configuration::from_bits(3, 3, b, m).unwrap();
                    fixed_point(&c).final_config
                })
                .collect();
            for m in 0u64..512 {
                let mut sup = m;
                // enumerate supersets of m
                loop {
                    let c = Configuration::from_bits(3, 3, b, m).unwrap();
                    let c2 = Configuration::from_bits(3, 3, b, sup).unwrap();
                    for n in 0..4 {
                        assert!(evolve(&c, n).le(&evolve(&c2, n)));
                    }
                    assert!(finals[m as usize].le(&finals[sup as usize]));
                    if sup == 511 {
                        break;
                    }
                    sup = (sup + 1) | m;
                }
            }
        }
    }

    #[test]
    fn fixed_point_is_idempotent_and_times_consistent() {
        for seed in 0..100u64 {
            let b = BoundaryCondition::ALL[seed as usize % 3];
            let c = sample_configuration(0.45, 13, 10, b, seed).unwrap();
            let r = fixed_point(&c);
            let (again, k) = step(&r.final_config);
            assert_eq!(k, 0);
            assert_eq!(again, r.final_config);
            assert!(r.stabilization_time as usize <= c.len());
            let max_t = r.flip_times.as_slice().iter().filter_map(|t| t.time()).max().unwrap_or(0);
            assert_eq!(max_t, r.stabilization_time);
            for site in c.geometry().sites() {
                match r.flip_times.get(site) {
                    FlipTime::InitiallyOpen => assert!(c.is_open(site)),
                    FlipTime::Never => assert!(!r.final_config.is_open(site)),
                    FlipTime::At(t) => {
                        assert!(!evolve(&c, t - 1).is_open(site));
                        assert!(evolve(&c, t).is_open(site));
                    }
                }
            }
        }
    }

    #[test]
    fn determinacy_examples() {
        let c = sea_with(3, 3, OpenHalo, &[(1, 1)]);
        assert!(determined_by_window(&c, Site::new(0, 0)).unwrap());
        assert!(determined_by_window(&c, Site::new(1, 1)).unwrap());
        for b in [OpenHalo, ClosedHalo] {
            let r = fixed_point(&c.with_boundary(b));
            assert_eq!(r.flip_times.get(Site::new(1, 1)), FlipTime::At(1));
        }

        // every site of a closed 3x3 block keeps two closed neighbors under either halo
        let all_closed = Configuration::filled(3, 3, OpenHalo, false).unwrap();
        assert_eq!(fixed_point(&all_closed).final_config, all_closed);
        for s in all_closed.geometry().sites() {
            assert!(determined_by_window(&all_closed, s).unwrap());
        }

        // a closed row touching both sides survives only if the halo is closed
        let row = Configuration::filled(3, 1, OpenHalo, false).unwrap();
        assert!(!determined_by_window(&row, Site::new(1, 0)).unwrap());
        assert!(determined_by_window(&row, Site::new(9, 9)).is_err());
    }

    #[test]
    fn light_cone_differential() {
        assert_eq!(light_cone_radius(0), 1);
        let n = 3u32;
        let r = light_cone_radius(n) as usize;
        for seed in 0..10_000u64 {
            let c = sample_configuration(0.45, 2 * r + 1, 2 * r + 1, OpenHalo, seed).unwrap();
            let o = c.geometry().center();
            let a = run(&c, Rule::BOOTSTRAP, Some(n)).flip_times.get(o);
            let b = run(&c.with_boundary(ClosedHalo), Rule::BOOTSTRAP, Some(n)).flip_times.get(o);
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn flip_time_stable_under_window_growth() {
        let n = 6u32;
        for seed in 0..3000u64 {
            let big = sample_configuration(0.4, 2 * (n as usize + 5) + 1, 2 * (n as usize + 5) + 1, OpenHalo, seed)
                .unwrap();
            let o = big.geometry().center();
            let small = big.window_around(o, light_cone_radius(n) as usize, OpenHalo);
            let so = small.geometry().center();
            let t_small = fixed_point(&small).flip_times.get(so);
            let t_big = fixed_point(&big).flip_times.get(o);
            if let Some(t) = t_small.time().filter(|&t| t <= n) {
                assert_eq!(t_big, FlipTime::At(t), "seed {seed}");
            }
            if let Some(t) = t_big.time().filter(|&t| t <= n) {
                assert_eq!(t_small, FlipTime::At(t), "seed {seed}");
            }
        }
    }

    #[test]
    fn evolution_text_round_trip() {
        let c = sample_configuration(0.5, 7, 4, Periodic, 11).unwrap();
        let r = fixed_point(&c);
        let text = r.to_text();
        assert!(text.starts_with("7 4 periodic\n"));
        assert_eq!(EvolutionResult::from_text(&text).unwrap(), r);
        let seg = sea_with(4, 1, OpenHalo, &[(1, 0), (2, 0)]);
        assert_eq!(fixed_point(&seg).to_text(), "4 1 open-halo\n1111\n* 1 1 *\n");
    }

    #[test]
    fn mutant_rule_differs() {
        let c = sea_with(6, 6, OpenHalo, &[(1, 1), (2, 1), (3, 1)]);
        let r = fixed_point_with_rule(&c, Rule { threshold: 2 });
        assert_eq!(r.stabilization_time, 1);
        assert_eq!(fixed_point(&c).stabilization_time, 2);
    }
}
