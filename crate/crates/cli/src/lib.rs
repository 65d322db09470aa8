//! Library side of the `calib` command-line tool: configuration, CSV and
//! SVG output, the band pipeline, and the seeded simulation presets.

pub mod config;
pub mod io;
pub mod presets;
pub mod run;
pub mod svg;
