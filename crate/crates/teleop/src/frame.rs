//! Grayscale rasters sent to the operator.

use std::io::Cursor;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use eif_core::mask_io::Observation;
use eif_core::sim::World;
use image::{GrayImage, ImageFormat, Luma};
use nalgebra::Vector2;
use sha2::{Digest, Sha256};

use crate::TeleopError;

const OUTSIDE: u8 = 0;
const APERTURE: u8 = 60;
const MASK: u8 = 200;
const MARK: u8 = 255;

const BOARD: u8 = 40;
const FOOTPRINT: u8 = 130;
const KNOB: u8 = 210;

/// Overhead view scale, millimetres per pixel.
pub const THIRD_PERSON_MM_PER_PX: f64 = 0.5;
/// Drawn radius of the tool in the overhead view.
const TOOL_RADIUS_MM: f64 = 8.0;

fn put(img: &mut GrayImage, x: i64, y: i64, v: u8) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Luma([v]));
    }
}

fn disc(img: &mut GrayImage, cx: f64, cy: f64, r: f64, v: u8) {
    let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
    let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                put(img, x, y, v);
            }
        }
    }
}

/// In-finger composite: aperture window, knob masks, crosshair at the tool
/// axis and the detected reflection.
pub fn eif_raster(obs: &Observation, aperture: (f64, f64, f64)) -> GrayImage {
    let (w, h) = (obs.width(), obs.height());
    let (ax, ay, ar) = aperture;
    let mut img = GrayImage::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - ax, y as f64 - ay);
        Luma([if dx * dx + dy * dy <= ar * ar {
            APERTURE
        } else {
            OUTSIDE
        }])
    });
    for m in obs.masks() {
        for (x, y) in m.pixels() {
            img.put_pixel(x, y, Luma([MASK]));
        }
    }
    let (cx, cy) = (ax.round() as i64, ay.round() as i64);
    for d in -20..=20 {
        put(&mut img, cx + d, cy, MARK);
        put(&mut img, cx, cy + d, MARK);
    }
    if let Some(p) = obs.reflection() {
        disc(&mut img, p.x, p.y, 4.0, MARK);
    }
    img
}

/// Fixed overhead view centred on the board origin. Shows the true tool
/// pose, which the operator cannot otherwise know.
pub fn third_person_raster(world: &World, width: u32, height: u32) -> GrayImage {
    let s = THIRD_PERSON_MM_PER_PX;
    let (hw, hh) = (width as f64 / 2.0, height as f64 / 2.0);
    let to_board = |x: u32, y: u32| Vector2::new((x as f64 - hw) * s, (hh - y as f64) * s);
    let mut img = GrayImage::from_fn(width, height, |x, y| {
        let p = to_board(x, y);
        let top = world
            .bricks()
            .iter()
            .filter(|b| b.footprint_contains(&p))
            .max_by_key(|b| b.level);
        Luma([match top {
            None => BOARD,
            Some(b) => {
                let r = b.spec.knob_radius_mm();
                if b.knob_positions().iter().any(|k| (k - p).norm() <= r) {
                    KNOB
                } else {
                    FOOTPRINT
                }
            }
        }])
    });
    let tool = world.tool_pose();
    let (tx, ty) = (hw + tool.x_mm / s, hh - tool.y_mm / s);
    let r = TOOL_RADIUS_MM / s;
    let steps = 720;
    for i in 0..steps {
        let a = i as f64 / steps as f64 * std::f64::consts::TAU;
        put(
            &mut img,
            (tx + r * a.cos()).round() as i64,
            (ty + r * a.sin()).round() as i64,
            MARK,
        );
    }
    // Heading tick along the tool x axis.
    let yaw = tool.yaw_deg.to_radians();
    for i in 0..=(r as i64) {
        let t = i as f64;
        put(
            &mut img,
            (tx + t * yaw.cos()).round() as i64,
            (ty - t * yaw.sin()).round() as i64,
            MARK,
        );
    }
    img
}

pub fn encode_png_base64(img: &GrayImage) -> Result<String, TeleopError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| TeleopError::Render(e.to_string()))?;
    Ok(STANDARD.encode(buf.into_inner()))
}

pub fn decode_png_base64(png: &str) -> Result<GrayImage, TeleopError> {
    let bytes = STANDARD
        .decode(png)
        .map_err(|e| TeleopError::Render(e.to_string()))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png)
        .map(|i| i.into_luma8())
        .map_err(|e| TeleopError::Render(e.to_string()))
}

/// Hex SHA-256 of the serialized world state.
pub fn state_digest(world: &World) -> String {
    let bytes = serde_json::to_vec(world.state()).expect("world state serializes");
    hex::encode(Sha256::digest(&bytes))
}
