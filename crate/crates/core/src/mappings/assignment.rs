//! Partitions of a specimen into fragments: contiguous time slices and
//! quadratically widening frequency bands.

use super::MappingError;

/// Assignment of each time index to one of `d'` contiguous slices.
///
/// Slices are numbered in time order starting at 0; the first `d mod d'`
/// slices are one sample longer than the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceAssignment {
    kappa: Vec<usize>,
    boundaries: Vec<usize>,
}

impl SliceAssignment {
    pub fn slice_of(&self, t: usize) -> usize {
        self.kappa[t]
    }

    pub fn kappa(&self) -> &[usize] {
        &self.kappa
    }

    /// `d' + 1` boundaries; slice `k` covers `boundaries[k]..boundaries[k + 1]`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn fragments(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn series_len(&self) -> usize {
        self.kappa.len()
    }
}

pub fn make_slice_assignment(d: usize, fragments: usize) -> Result<SliceAssignment, MappingError> {
    if fragments < 1 || fragments > d {
        return Err(MappingError::FragmentCountOutOfRange { fragments, max: d });
    }
    let (base, extra) = (d / fragments, d % fragments);
    let mut boundaries = Vec::with_capacity(fragments + 1);
    let mut start = 0;
    boundaries.push(0);
    for k in 0..fragments {
        start += base + usize::from(k < extra);
        boundaries.push(start);
    }
    let mut kappa = Vec::with_capacity(d);
    for k in 0..fragments {
        kappa.extend(std::iter::repeat_n(k, boundaries[k + 1] - boundaries[k]));
    }
    Ok(SliceAssignment { kappa, boundaries })
}

/// Assignment of DFT bins `1..=d/2` to `d'` bands; bin 0 (DC) belongs to none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandAssignment {
    edges: Vec<usize>,
    series_len: usize,
}

impl BandAssignment {
    /// `d' + 1` strictly increasing edges; band `k` covers bins `edges[k]..edges[k + 1]`.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn fragments(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Band of `bin`, or `None` for DC and bins past the Nyquist bin.
    pub fn band_of(&self, bin: usize) -> Option<usize> {
        if bin == 0 || bin >= *self.edges.last()? {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= bin) - 1)
    }

    /// Inclusive bin range `(low, high)` of band `k`.
    pub fn bins(&self, band: usize) -> (usize, usize) {
        (self.edges[band], self.edges[band + 1] - 1)
    }

    pub fn widths(&self) -> Vec<usize> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Integer widths made non-decreasing by pooling adjacent violators.
///
/// A pooled block of `c` widths summing to `s` is spread as `s / c` with the
/// remainder going to its last entries; blocks merge until every block's
/// largest width is at most the next block's smallest.
fn monotone_widths(widths: &[usize]) -> Vec<usize> {
    let mut blocks: Vec<(usize, usize)> = Vec::with_capacity(widths.len());
    for &w in widths {
        blocks.push((w, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 2];
            let (s2, c2) = blocks[blocks.len() - 1];
            if s1.div_ceil(c1) <= s2 / c2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("two blocks present");
            *last = (s1 + s2, c1 + c2);
        }
    }
    let mut out = Vec::with_capacity(widths.len());
    for (sum, count) in blocks {
        let (q, r) = (sum / count, sum % count);
        out.extend(std::iter::repeat_n(q, count - r));
        out.extend(std::iter::repeat_n(q + 1, r));
    }
    out
}

/// Splits bins `1..=d/2` into `d'` bands whose widths grow quadratically.
///
/// Interior edges are `1 + round((d/2 - 1) (k/d')^2)`, the last edge is
/// `d/2 + 1`; edges that fail to increase are bumped right, and the
/// resulting widths are repaired to be non-decreasing.
pub fn make_band_assignment(d: usize, fragments: usize) -> Result<BandAssignment, MappingError> {
    let top = d / 2;
    if fragments < 1 || fragments > top {
        return Err(MappingError::FragmentCountOutOfRange { fragments, max: top });
    }
    let span = (top - 1) as f64;
    let mut edges: Vec<usize> = (0..fragments)
        .map(|k| {
            let r = k as f64 / fragments as f64;
            1 + (span * r * r + 0.5).floor() as usize
        })
        .collect();
    edges.push(top + 1);
    for k in 1..edges.len() {
        if edges[k] <= edges[k - 1] {
            edges[k] = edges[k - 1] + 1;
        }
    }
    let widths: Vec<usize> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let mut repaired = Vec::with_capacity(edges.len());
    repaired.push(1);
    for w in monotone_widths(&widths) {
        repaired.push(repaired.last().copied().unwrap_or(1) + w);
    }
    Ok(BandAssignment { edges: repaired, series_len: d })
}
