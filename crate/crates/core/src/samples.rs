//! Plain-text sample files.
//!
//! The native format starts with a header line
//! `S3SAMPLES v1 nu nv topo_u topo_v u0 u1 v0 v1` followed by `nu·nv` rows
//! `u v x1 y1 x2 y2` in i-major order. The `fields.csv` files written by the
//! analyzer are accepted as well; their grid is inferred from the
//! coordinate columns.

use std::f64::consts::TAU;
use std::path::Path;

use crate::ambient::C2;
use crate::error::{GeomError, Result};
use crate::grid::{Axis, Field, GridSpec, Topology};
use crate::surface::SurfaceGrid;

pub const MAGIC: &str = "S3SAMPLES";
pub const VERSION: &str = "v1";

/// Formats like C's `%.12e`: `1.000000000000e+00`.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_samples(grid: &SurfaceGrid) -> String {
    let spec = &grid.spec;
    let mut out = format!(
        "{MAGIC} {VERSION} {} {} {} {} {} {} {} {}\n",
        spec.u.n,
        spec.v.n,
        spec.u.topology,
        spec.v.topology,
        fmt_float(spec.u.start),
        fmt_float(spec.u.end),
        fmt_float(spec.v.start),
        fmt_float(spec.v.end)
    );
    for ((i, j), p) in grid.points().rows() {
        let (u, v) = spec.coords(i, j);
        let cols = [u, v, p.x1, p.y1, p.x2, p.y2].map(fmt_float);
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_samples(grid: &SurfaceGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_samples(grid))?;
    Ok(())
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SurfaceGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("samples").to_string();
    parse_samples(&text, &label)
}

/// Parses either the native format or an analyzer `fields.csv`.
pub fn parse_samples(text: &str, label: &str) -> Result<SurfaceGrid> {
    let first = text.lines().next().unwrap_or("");
    if first.starts_with(MAGIC) {
        parse_native(text, label)
    } else if first.starts_with("u,v,x1,y1,x2,y2") {
        parse_fields_csv(text, label)
    } else {
        Err(parse_err(1, format!("expected a {MAGIC} header or a fields.csv header")))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> GeomError {
    GeomError::Parse { line, message: message.into() }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| parse_err(line, format!("{tok:?} is not a number")))
}

fn parse_native(text: &str, label: &str) -> Result<SurfaceGrid> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 10 {
        return Err(parse_err(1, format!("header has {} fields, expected 10", tok.len())));
    }
    if tok[1] != VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", tok[1])));
    }
    let count = |s: &str| s.parse::<usize>().map_err(|_| parse_err(1, format!("{s:?} is not a node count")));
    let topo = |s: &str| s.parse::<Topology>().map_err(|e| parse_err(1, e.to_string()));
    let (nu, nv) = (count(tok[2])?, count(tok[3])?);
    let (tu, tv) = (topo(tok[4])?, topo(tok[5])?);
    let mut r: Vec<f64> = tok[6..].iter().map(|t| number(t, 1)).collect::<Result<_>>()?;
    // a full turn survives the 13-digit text form only approximately
    for (k, t) in [(0, tu), (2, tv)] {
        if t == Topology::Periodic && (r[k + 1] - r[k] - TAU).abs() < 1e-9 {
            r[k + 1] = r[k] + TAU;
        }
    }
    let spec = GridSpec::new(Axis { n: nu, start: r[0], end: r[1], topology: tu }, Axis { n: nv, start: r[2], end: r[3], topology: tv })
        .map_err(|e| parse_err(1, e.to_string()))?;

    let mut points = Vec::with_capacity(nu * nv);
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(parse_err(line, format!("expected 6 columns, found {}", cols.len())));
        }
        let vals: Vec<f64> = cols.iter().map(|c| number(c, line)).collect::<Result<_>>()?;
        let k = points.len();
        if k >= nu * nv {
            return Err(parse_err(line, format!("more than {} rows", nu * nv)));
        }
        let (u, v) = spec.coords(k / nv, k % nv);
        let tol = 1e-9 * (1.0 + u.abs().max(v.abs()));
        if (vals[0] - u).abs() > tol || (vals[1] - v).abs() > tol {
            return Err(parse_err(line, format!("coordinates ({}, {}) do not match node ({u}, {v})", vals[0], vals[1])));
        }
        points.push(C2::new(vals[2], vals[3], vals[4], vals[5]));
    }
    if points.len() != nu * nv {
        return Err(parse_err(text.lines().count(), format!("found {} rows, expected {}", points.len(), nu * nv)));
    }
    SurfaceGrid::from_points(spec, label, Field::from_vec(nu, nv, points))
}

fn infer_axis(values: &[f64]) -> Result<Axis> {
    let n = values.len();
    if n < 2 {
        return Err(parse_err(1, "cannot infer a grid from fewer than two distinct coordinates"));
    }
    let (first, last) = (values[0], values[n - 1]);
    let h = (last - first) / (n - 1) as f64;
    for (k, x) in values.iter().enumerate() {
        if (x - (first + k as f64 * h)).abs() > 1e-8 * (1.0 + x.abs()) {
            return Err(parse_err(1, "coordinates are not uniformly spaced"));
        }
    }
    if ((last - first) + h - TAU).abs() < 1e-6 {
        Ok(Axis::periodic(n, first, first + n as f64 * h))
    } else {
        Ok(Axis::chart(n, first, last))
    }
}

fn parse_fields_csv(text: &str, label: &str) -> Result<SurfaceGrid> {
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    let width = header.len();
    let mut rows = Vec::new();
    for (k, row) in text.lines().enumerate().skip(1) {
        if row.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != width {
            return Err(parse_err(k + 1, format!("expected {width} columns, found {}", cols.len())));
        }
        let vals: Vec<f64> = cols[..6].iter().map(|c| number(c, k + 1)).collect::<Result<_>>()?;
        rows.push((k + 1, vals));
    }
    let first_u = rows.first().map(|r| r.1[0]).ok_or_else(|| parse_err(2, "no data rows"))?;
    let nv = rows.iter().take_while(|r| r.1[0] == first_u).count();
    if rows.len() % nv != 0 {
        return Err(parse_err(rows.len() + 1, "row count is not a multiple of the v resolution"));
    }
    let nu = rows.len() / nv;
    let us: Vec<f64> = (0..nu).map(|i| rows[i * nv].1[0]).collect();
    let vs: Vec<f64> = (0..nv).map(|j| rows[j].1[1]).collect();
    let spec = GridSpec::new(infer_axis(&us)?, infer_axis(&vs)?).map_err(|e| parse_err(1, e.to_string()))?;
    for (k, (line, vals)) in rows.iter().enumerate() {
        let (u, v) = (us[k / nv], vs[k % nv]);
        if vals[0] != u || vals[1] != v {
            return Err(parse_err(*line, "rows are not in i-major grid order"));
        }
    }
    let points = rows.iter().map(|(_, v)| C2::new(v[2], v[3], v[4], v[5])).collect();
    SurfaceGrid::from_points(spec, label, Field::from_vec(nu, nv, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::surface::contact_angle_field;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_float(1.0), "1.000000000000e+00");
        assert_eq!(fmt_float(-0.00123), "-1.230000000000e-03");
        assert_eq!(fmt_float(6.02e23), "6.020000000000e+23");
        assert_eq!(fmt_float(1e-300), "1.000000000000e-300");
        assert_eq!(fmt_float(0.0), "0.000000000000e+00");
    }

    #[test]
    fn native_round_trip_preserves_beta() {
        for entry in [catalog::clifford(), catalog::geodesic_sphere()] {
            let grid = entry.sample(32, 32).unwrap();
            let text = format_samples(&grid);
            let back = parse_samples(&text, "x").unwrap();
            assert_eq!(back.spec.v, grid.spec.v);
            assert_eq!((back.spec.u.n, back.spec.u.topology), (grid.spec.u.n, grid.spec.u.topology));
            assert!((back.spec.u.end - grid.spec.u.end).abs() < 1e-11);
            let (a, b) = (contact_angle_field(&grid).unwrap(), contact_angle_field(&back).unwrap());
            for (x, y) in a.beta.iter().zip(b.beta.iter()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn wrong_column_count_is_a_parse_error() {
        let grid = catalog::clifford().sample(8, 8).unwrap();
        let mut text = format_samples(&grid);
        text = text.replacen("\n", "\n0 0 1\n", 1);
        match parse_samples(&text, "x") {
            Err(GeomError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn off_sphere_point_names_its_node() {
        let grid = catalog::clifford().sample(8, 8).unwrap();
        let text = format_samples(&grid);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let (u, v) = grid.spec.coords(2, 3);
        let p = grid.points().get(2, 3).normalized() * 0.9;
        lines[1 + 2 * 8 + 3] = [u, v, p.x1, p.y1, p.x2, p.y2].map(fmt_float).join(" ");
        match parse_samples(&lines.join("\n"), "x") {
            Err(GeomError::OffSphere { node, norm }) => {
                assert_eq!(node, (2, 3));
                assert!((norm - 0.9).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fields_csv_layout_is_accepted() {
        let grid = catalog::geodesic_sphere().sample(16, 16).unwrap();
        let mut csv = String::from("u,v,x1,y1,x2,y2,beta\n");
        for ((i, j), p) in grid.points().rows() {
            let (u, v) = grid.spec.coords(i, j);
            csv.push_str(&[u, v, p.x1, p.y1, p.x2, p.y2, 0.0].map(fmt_float).join(","));
            csv.push('\n');
        }
        let back = parse_samples(&csv, "x").unwrap();
        assert_eq!(back.spec.u.topology, Topology::Chart);
        assert_eq!(back.spec.v.topology, Topology::Periodic);
        assert!((back.spec.u.end - grid.spec.u.end).abs() < 1e-9);
        assert!((back.spec.v.end - TAU).abs() < 1e-9);
    }

    #[test]
    fn unknown_header_rejected() {
        assert!(matches!(parse_samples("hello\n", "x"), Err(GeomError::Parse { line: 1, .. })));
    }
}
