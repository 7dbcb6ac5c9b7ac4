use crate::error::{invalid, Result};

/// A point of `R^d`; the last coordinate plays the role of the response when
/// vertical residuals are used.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("point has no coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point has a non-finite coordinate"));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Last coordinate.
    pub fn response(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `n ≥ d + 1` points of a common dimension `d ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Point>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let dim = points.first().map(Point::dim).ok_or_else(|| invalid("empty dataset"))?;
        if dim < 2 {
            return Err(invalid("points need at least two coordinates"));
        }
        if points.iter().any(|p| p.dim() != dim) {
            return Err(invalid("points have differing dimensions"));
        }
        if points.len() < dim + 1 {
            return Err(invalid(format!(
                "{} points cannot determine a hyperplane fit in dimension {dim}",
                points.len()
            )));
        }
        Ok(Self { points, dim })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[j]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i].clone()).collect())
    }

    /// Applies `f` to every coordinate.
    pub fn map_coords(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let points =
            self.points.iter().map(|p| Point(p.0.iter().enumerate().map(|(j, &v)| f(j, v)).collect())).collect();
        Self { points, dim: self.dim }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_coords(|_, v| v * factor)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim).map(|j| self.points.iter().map(|p| p[j]).sum::<f64>() / n).collect()
    }
}
