//! Bundled reference datasets.

use crate::geometry::Dataset;

const STARS: &str = include_str!("../data/stars.csv");
const DURBIN_WATSON: &str = include_str!("../data/durbin_watson.csv");

fn parse(text: &str) -> Dataset {
    let rows = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().expect("bundled data is numeric")).collect())
        .collect();
    Dataset::from_rows(rows).expect("bundled data is well formed")
}

/// Hertzsprung–Russell diagram of the star cluster CYG OB1: 47 stars,
/// log surface temperature against log light intensity.
pub fn stars() -> Dataset {
    parse(STARS)
}

/// Durbin–Watson annual consumption data: 69 observations of log income
/// against log consumption.
pub fn durbin_watson() -> Dataset {
    parse(DURBIN_WATSON)
}

/// Raw CSV text of the star cluster data (with header).
pub fn stars_csv() -> &'static str {
    STARS
}

/// Raw CSV text of the consumption data (with header).
pub fn durbin_watson_csv() -> &'static str {
    DURBIN_WATSON
}
