//! Orthographic SVG plots for instances on the 2-sphere: input caps as
//! filled circles (ellipses in projection), the cover cap boundary dashed,
//! and the witness great circle when the instance is separable. Output is
//! deterministic byte-for-byte for fixed inputs.

use std::fmt::Write;

use thiserror::Error;

use crate::cover::CoverCertificate;
use crate::sphere::{Instance, Point};
use crate::vecmath as vm;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("plots are supported for dim = 2 only, got dim {0}")]
    WrongDimension(usize),
}

const SIZE: f64 = 640.0;
const SCALE: f64 = 280.0;
const BOUNDARY_SAMPLES: usize = 180;

struct Frame {
    u1: Vec<f64>,
    u2: Vec<f64>,
    view: Vec<f64>,
}

impl Frame {
    fn for_axis(view: &[f64]) -> Self {
        let seed = if view[0].abs() < 0.9 {
            vec![1.0, 0.0, 0.0]
        } else {
            vec![0.0, 1.0, 0.0]
        };
        let u1 = vm::normalized(&vm::reject(&seed, view)).expect("seed is not parallel");
        let u2 = cross(view, &u1);
        Self {
            u1,
            u2,
            view: view.to_vec(),
        }
    }

    fn project(&self, x: &[f64]) -> (f64, f64, f64) {
        (
            SIZE / 2.0 + SCALE * vm::dot(x, &self.u1),
            SIZE / 2.0 - SCALE * vm::dot(x, &self.u2),
            vm::dot(x, &self.view),
        )
    }
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Sampled boundary circle of a cap: points at angular distance `radius`
/// from `center`.
fn cap_boundary(center: &[f64], radius: f64) -> Vec<Vec<f64>> {
    let frame = Frame::for_axis(center);
    let (c, s) = (radius.cos(), radius.sin());
    (0..BOUNDARY_SAMPLES)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / BOUNDARY_SAMPLES as f64;
            let mut p = vm::scale(center, c);
            vm::axpy(&mut p, s * t.cos(), &frame.u1);
            vm::axpy(&mut p, s * t.sin(), &frame.u2);
            p
        })
        .collect()
}

fn path_data(frame: &Frame, points: &[Vec<f64>], close: bool) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let (x, y, _) = frame.project(p);
        let cmd = if i == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{x:.6} {y:.6} ").unwrap();
    }
    if close {
        d.push('Z');
    } else {
        d.pop();
    }
    d
}

/// Renders the instance (and optionally a certificate and a separation
/// witness) viewed along the cover axis, or along the last coordinate axis
/// when no certificate is given.
pub fn render(
    inst: &Instance,
    cert: Option<&CoverCertificate>,
    witness: Option<&Point>,
) -> Result<String, SvgError> {
    if inst.dim != 2 {
        return Err(SvgError::WrongDimension(inst.dim));
    }
    let view: Vec<f64> = match cert {
        Some(c) => vm::normalized(&c.final_w).unwrap_or_else(|| vec![0.0, 0.0, 1.0]),
        None => vec![0.0, 0.0, 1.0],
    };
    // look from the cover cap's side
    let view = match cert {
        Some(c) if vm::dot(&view, c.cover_cap.center.coords()) < 0.0 => vm::neg(&view),
        _ => view,
    };
    let frame = Frame::for_axis(&view);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
        s = SIZE as u64
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect width="{s}" height="{s}" fill="white"/>"#,
        s = SIZE as u64
    )
    .unwrap();
    writeln!(
        svg,
        r##"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="#888" stroke-width="1"/>"##,
        c = SIZE / 2.0,
        r = SCALE
    )
    .unwrap();

    for cap in &inst.caps {
        let boundary = cap_boundary(cap.center.coords(), cap.radius);
        let front = vm::dot(cap.center.coords(), &frame.view) >= 0.0;
        let opacity = if front { "0.35" } else { "0.12" };
        writeln!(
            svg,
            r#"<path d="{}" fill="steelblue" fill-opacity="{opacity}" stroke="steelblue" stroke-width="1.2"/>"#,
            path_data(&frame, &boundary, true)
        )
        .unwrap();
    }

    if let Some(cert) = cert {
        let boundary = cap_boundary(cert.cover_cap.center.coords(), cert.cover_cap.radius);
        writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="black" stroke-width="1.6" stroke-dasharray="8 5"/>"#,
            path_data(&frame, &boundary, true)
        )
        .unwrap();
        let (cx, cy, _) = frame.project(cert.cover_cap.center.coords());
        writeln!(
            svg,
            r#"<circle cx="{cx:.6}" cy="{cy:.6}" r="2.5" fill="black"/>"#
        )
        .unwrap();
    }

    if let Some(normal) = witness {
        let gc_frame = Frame::for_axis(normal.coords());
        let circle: Vec<Vec<f64>> = (0..BOUNDARY_SAMPLES)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / BOUNDARY_SAMPLES as f64;
                let mut p = vm::scale(&gc_frame.u1, t.cos());
                vm::axpy(&mut p, t.sin(), &gc_frame.u2);
                p
            })
            .collect();
        writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="crimson" stroke-width="1.4"/>"#,
            path_data(&frame, &circle, true)
        )
        .unwrap();
    }

    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{cover_caps, CoverOptions};
    use crate::gen;
    use crate::sphere::Cap;

    #[test]
    fn render_is_deterministic() {
        let inst = gen::chain(
            2,
            &[std::f64::consts::PI / 12.0; 3],
            0.0,
            7,
        )
        .unwrap();
        let cert = cover_caps(&inst, &CoverOptions::default()).unwrap();
        let a = render(&inst, Some(&cert), None).unwrap();
        let b = render(&inst, Some(&cert), None).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("stroke-dasharray"));
        assert_eq!(a.matches("<path").count(), inst.caps.len() + 1);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let inst = crate::sphere::Instance::new(
            3,
            vec![Cap::new(crate::sphere::Point::basis(4, 0), 0.3).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            render(&inst, None, None),
            Err(SvgError::WrongDimension(3))
        ));
    }
}
