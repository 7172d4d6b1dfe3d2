use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::geometry::Pixel;
use crate::mask_io::KnobMask;

/// Minimum number of mask pixels an extremal row/column needs before it is
/// accepted as a bounding line.
pub const DEFAULT_LINE_SUPPORT: usize = 3;

/// The horizontal (`l_h`) and vertical (`l_v`) lines bounding a mask on the
/// side facing the tool centre.
///
/// Each line lies `depth` pixels beyond the centre of its extremal
/// row/column, on the tool side. Unrefined lines use a depth of 0.5, the
/// outer pixel edge; [`BoundingLines::refined`] replaces that with the depth
/// implied by the extremal run length and the expected knob curvature. The
/// side flags say on which side of each line the reconstructed circle lies;
/// it is always the side away from the tool centre, because the lines
/// separate the knob from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingLines {
    /// Row index of `l_h`.
    pub row: u32,
    /// Column index of `l_v`.
    pub col: u32,
    /// Circle centre lies at larger `v` than `l_h`.
    pub circle_below: bool,
    /// Circle centre lies at larger `u` than `l_v`.
    pub circle_right: bool,
    /// Mask pixels in the extremal row.
    pub row_run: u32,
    /// Mask pixels in the extremal column.
    pub col_run: u32,
    pub row_depth: f64,
    pub col_depth: f64,
}

/// Distance from the centre of a chord of length `run` to the tangent of a
/// parallel radius-`r` circle edge.
fn sagitta(run: u32, r: f64) -> f64 {
    let half = (run as f64 / 2.0).min(r);
    r - (r * r - half * half).sqrt()
}

impl BoundingLines {
    /// Continuous `v` coordinate of `l_h`.
    pub fn h_line(&self) -> f64 {
        if self.circle_below {
            self.row as f64 - self.row_depth
        } else {
            self.row as f64 + self.row_depth
        }
    }

    /// Continuous `u` coordinate of `l_v`.
    pub fn v_line(&self) -> f64 {
        if self.circle_right {
            self.col as f64 - self.col_depth
        } else {
            self.col as f64 + self.col_depth
        }
    }

    /// Sub-pixel lines for a knob of expected radius `r_px`: a pixel-centre
    /// chord of `n` pixels on a circle edge lies one sagitta inside the
    /// tangent.
    pub fn refined(&self, r_px: f64) -> Self {
        BoundingLines {
            row_depth: sagitta(self.row_run, r_px),
            col_depth: sagitta(self.col_run, r_px),
            ..*self
        }
    }

    /// Centre of the radius-`r` circle tangent to both lines.
    pub fn center_for_radius(&self, r: f64) -> Pixel {
        let su = if self.circle_right { 1.0 } else { -1.0 };
        let sv = if self.circle_below { 1.0 } else { -1.0 };
        Pixel::new(self.v_line() + su * r, self.h_line() + sv * r)
    }
}

/// Finds `l_h` and `l_v` for `mask` relative to `tool_center`.
///
/// A mask whose centroid is level with the tool centre on an axis is treated
/// as lying on the low-coordinate side of it.
pub fn find_bounding_lines(
    mask: &KnobMask,
    tool_center: &Pixel,
    support: usize,
) -> Result<BoundingLines, EstimatorError> {
    let (x0, y0, w, h) = mask.bounds();
    let mut col_counts = vec![0usize; w as usize];
    let mut row_counts = vec![0usize; h as usize];
    for (x, y) in mask.pixels() {
        col_counts[(x - x0) as usize] += 1;
        row_counts[(y - y0) as usize] += 1;
    }
    let degenerate = || EstimatorError::DegenerateMask {
        label: mask.label(),
        support,
    };

    let centroid = mask.centroid();
    let circle_right = centroid.x > tool_center.x;
    let circle_below = centroid.y > tool_center.y;

    // The bounding line faces the tool: a mask left of centre is bounded by
    // its rightmost well-supported column, and so on.
    let col = if circle_right {
        col_counts.iter().position(|&c| c >= support)
    } else {
        col_counts.iter().rposition(|&c| c >= support)
    }
    .ok_or_else(degenerate)?;
    let row = if circle_below {
        row_counts.iter().position(|&c| c >= support)
    } else {
        row_counts.iter().rposition(|&c| c >= support)
    }
    .ok_or_else(degenerate)?;

    Ok(BoundingLines {
        row: y0 + row as u32,
        col: x0 + col as u32,
        circle_below,
        circle_right,
        row_run: row_counts[row] as u32,
        col_run: col_counts[col] as u32,
        row_depth: 0.5,
        col_depth: 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::render_disc_mask;

    fn disc(cx: f64, cy: f64, r: f64) -> KnobMask {
        render_disc_mask(0, Pixel::new(cx, cy), r, None, 640, 480).unwrap()
    }

    #[test]
    fn disc_left_and_above_center() {
        let m = disc(200.3, 120.6, 40.0);
        let lines = find_bounding_lines(&m, &Pixel::new(320.0, 240.0), 3).unwrap();
        let (x0, y0, w, h) = m.bounds();
        // Rightmost column and bottom row of the disc, each with ≥3 pixels.
        assert!(!lines.circle_right && !lines.circle_below);
        assert!(lines.col < x0 + w && lines.col >= x0 + w - 2);
        assert!(lines.row < y0 + h && lines.row >= y0 + h - 2);
        let col_pixels = m.pixels().filter(|p| p.0 == lines.col).count();
        assert!(col_pixels >= 3);
        // True edge u = 240.3 lies within a pixel of the line.
        assert!((lines.v_line() - 240.3).abs() < 1.0);
        assert!((lines.h_line() - 160.6).abs() < 1.0);
    }

    #[test]
    fn disc_right_and_below_center() {
        let m = disc(450.0, 400.0, 30.0);
        let lines = find_bounding_lines(&m, &Pixel::new(320.0, 240.0), 3).unwrap();
        assert!(lines.circle_right && lines.circle_below);
        assert!((lines.v_line() - 420.0).abs() < 1.0);
        assert!((lines.h_line() - 370.0).abs() < 1.0);
    }

    #[test]
    fn far_side_clipping_keeps_lines() {
        let center = Pixel::new(320.0, 240.0);
        let full = disc(250.0, 200.0, 40.0);
        // Aperture around the tool centre removes the far (upper-left) part.
        let clipped = render_disc_mask(
            0,
            Pixel::new(250.0, 200.0),
            40.0,
            Some((center, 100.0)),
            640,
            480,
        )
        .unwrap();
        assert!(clipped.count() < full.count());
        let a = find_bounding_lines(&full, &center, 3).unwrap();
        let b = find_bounding_lines(&clipped, &center, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thin_mask_is_degenerate() {
        let m = KnobMask::from_pixels(5, [(10, 10), (11, 10)]).unwrap();
        assert!(matches!(
            find_bounding_lines(&m, &Pixel::new(320.0, 240.0), 3),
            Err(EstimatorError::DegenerateMask {
                label: 5,
                support: 3
            })
        ));
    }

    #[test]
    fn steps_inward_past_sparse_extremes() {
        // A 10x10 block with a single stray pixel to its right.
        let mut px: Vec<(u32, u32)> = (0..10)
            .flat_map(|y| (0..10).map(move |x| (100 + x, 100 + y)))
            .collect();
        px.push((112, 105));
        let m = KnobMask::from_pixels(0, px).unwrap();
        let lines = find_bounding_lines(&m, &Pixel::new(320.0, 240.0), 3).unwrap();
        assert_eq!(lines.col, 109);
        assert_eq!(lines.row, 109);
    }

    #[test]
    fn refined_lines_track_subpixel_edges() {
        let center = Pixel::new(320.0, 240.0);
        let r = 66.4;
        for k in 0..20 {
            let cx = 200.0 + k as f64 * 0.05;
            let m = disc(cx, 150.0, r);
            let lines = find_bounding_lines(&m, &center, 3).unwrap().refined(r);
            assert!(
                (lines.v_line() - (cx + r)).abs() < 0.15,
                "{cx}: {}",
                lines.v_line()
            );
            assert!((lines.h_line() - (150.0 + r)).abs() < 0.15);
        }
    }

    #[test]
    fn sagitta_of_full_diameter_is_radius() {
        assert!((sagitta(20, 10.0) - 10.0).abs() < 1e-12);
        assert_eq!(sagitta(0, 10.0), 0.0);
        assert!(sagitta(30, 10.0) <= 10.0);
    }
}
