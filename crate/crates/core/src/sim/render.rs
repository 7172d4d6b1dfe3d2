use std::f64::consts::TAU;

use crate::geometry::Pixel;
use crate::mask_io::KnobMask;

/// Rasterizes a disc as a mask, counting pixel centres.
///
/// Pixel `(c, r)` is set when `(c - cx)² + (r - cy)² <= radius²` and, if an
/// aperture `(centre, radius)` is given, its centre also lies inside the
/// aperture. Returns `None` when no pixel of the `width × height` image is
/// set.
pub fn render_disc_mask(
    label: u32,
    center: Pixel,
    radius: f64,
    aperture: Option<(Pixel, f64)>,
    width: u32,
    height: u32,
) -> Option<KnobMask> {
    render_jittered_disc(label, center, radius, &[], aperture, width, height)
}

/// Like [`render_disc_mask`] with a boundary perturbed by `jitter`: radial
/// offsets (px) at evenly spaced angles, linearly interpolated around the
/// circle. An empty slice means no jitter.
pub fn render_jittered_disc(
    label: u32,
    center: Pixel,
    radius: f64,
    jitter: &[f64],
    aperture: Option<(Pixel, f64)>,
    width: u32,
    height: u32,
) -> Option<KnobMask> {
    if !(radius > 0.0) || width == 0 || height == 0 {
        return None;
    }
    let reach = radius + jitter.iter().fold(0.0f64, |m, j| m.max(*j));
    if reach <= 0.0 {
        return None;
    }
    let clamp = |v: f64, hi: u32| v.max(0.0).min(hi as f64 - 1.0);
    let c0 = clamp((center.x - reach).floor(), width);
    let c1 = clamp((center.x + reach).ceil(), width);
    let r0 = clamp((center.y - reach).floor(), height);
    let r1 = clamp((center.y + reach).ceil(), height);
    if center.x + reach < 0.0
        || center.y + reach < 0.0
        || center.x - reach > width as f64 - 1.0
        || center.y - reach > height as f64 - 1.0
    {
        return None;
    }
    let (c0, c1, r0, r1) = (c0 as u32, c1 as u32, r0 as u32, r1 as u32);
    let n = jitter.len();
    let r2 = radius * radius;

    let mut pixels = Vec::new();
    for r in r0..=r1 {
        let dy = r as f64 - center.y;
        for c in c0..=c1 {
            let dx = c as f64 - center.x;
            let d2 = dx * dx + dy * dy;
            let inside = if n == 0 {
                d2 <= r2
            } else {
                let t = (dy.atan2(dx).rem_euclid(TAU) / TAU) * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                let frac = t - i as f64;
                let local = radius + jitter[i] * (1.0 - frac) + jitter[(i + 1) % n] * frac;
                local > 0.0 && d2 <= local * local
            };
            if !inside {
                continue;
            }
            if let Some((a, ra)) = aperture {
                let ax = c as f64 - a.x;
                let ay = r as f64 - a.y;
                if ax * ax + ay * ay > ra * ra {
                    continue;
                }
            }
            pixels.push((c, r));
        }
    }
    KnobMask::from_pixels(label, pixels).ok()
}
