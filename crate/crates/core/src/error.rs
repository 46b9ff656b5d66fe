use thiserror::Error;

use crate::lattice::Site;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("window dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },

    #[error("plaquette partition needs even dimensions, got {width}x{height}")]
    OddDimension { width: usize, height: usize },

    #[error("site ({}, {}) lies outside the {width}x{height} window", .site.x, .site.y)]
    OutOfWindow {
        site: Site,
        width: usize,
        height: usize,
    },

    #[error("sites ({}, {}) and ({}, {}) are not Z2-neighbors", .a.x, .a.y, .b.x, .b.y)]
    NotNeighbors { a: Site, b: Site },

    #[error("site ({}, {}) must be closed", .0.x, .0.y)]
    OpenCenter(Site),

    #[error("branch through ({}, {}) touches the window rim", .0.x, .0.y)]
    WindowTruncatedBranch(Site),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("rectangle {width}x{height} at ({}, {}) does not fit the window", .offset.x, .offset.y)]
    RectOutOfWindow {
        width: usize,
        height: usize,
        offset: Site,
    },

    #[error("fit needs at least 3 points in the window, got {0}")]
    TooFewPoints(usize),

    #[error("log-transform needs positive values, got ({0}, {1})")]
    NonPositive(f64, f64),

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
