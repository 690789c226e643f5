//! Field output (legacy-VTK and CSV), matching readers, and atomic text
//! writes.
//!
//! Floats are formatted with Rust's shortest-round-trip `{}` notation, so
//! a written file parses back to bit-identical coefficients.  All writes
//! go through a temporary file in the destination directory followed by a
//! rename, so readers never observe a half-written file.

use crate::error::Error;
use crate::field::Field;
use crate::mesh::Mesh;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

/// On-disk representation for a scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Legacy-VTK ASCII unstructured grid (`.vtk`), loadable by ParaView.
    Vtk,
    /// `x,y,value` rows in lexicographic node order (`.csv`).
    Csv,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Vtk => "vtk",
            OutputFormat::Csv => "csv",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vtk" => Ok(OutputFormat::Vtk),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidParameter {
                message: format!("unknown output format {other:?} (expected vtk or csv)"),
            }),
        }
    }
}

/// Writes `content` to `path` atomically: the bytes land in a temporary
/// sibling file first and are renamed into place.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter {
            message: format!("output path {} has no file name", path.display()),
        })?
        .to_owned();
    let mut tmp_name = file_name;
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => Path::new(&tmp_name).to_path_buf(),
    };
    std::fs::write(&tmp, content)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// VTK scalar names must be single tokens; anything else would corrupt the
/// `SCALARS` header line.
fn sanitize_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    if cleaned.is_empty() {
        "field".to_string()
    } else {
        cleaned
    }
}

/// Renders a nodal field as a legacy-VTK ASCII unstructured grid with one
/// `POINT_DATA` scalar array.
pub fn vtk_string(field: &Field, mesh: &Mesh, name: &str) -> Result<String> {
    field.check_mesh(mesh)?;
    let name = sanitize_name(name);
    let nn = mesh.num_nodes();
    let nt = mesh.triangles.len();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{name} on a {0}x{0} criss-cross mesh of the unit square", mesh.n);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nn} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for tri in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {nn}");
    let _ = writeln!(s, "SCALARS {name} double 1");
    s.push_str("LOOKUP_TABLE default\n");
    for v in &field.coeffs {
        let _ = writeln!(s, "{v}");
    }
    Ok(s)
}

/// Renders a nodal field as `x,y,<name>` rows in lexicographic node order.
pub fn csv_string(field: &Field, mesh: &Mesh, name: &str) -> Result<String> {
    field.check_mesh(mesh)?;
    let mut s = format!("x,y,{}\n", sanitize_name(name));
    for (p, v) in mesh.nodes.iter().zip(&field.coeffs) {
        let _ = writeln!(s, "{},{},{}", p.x, p.y, v);
    }
    Ok(s)
}

/// Writes a field to `path` in the requested format (atomically).
pub fn write_field(
    path: &Path,
    field: &Field,
    mesh: &Mesh,
    name: &str,
    format: OutputFormat,
) -> Result<()> {
    let content = match format {
        OutputFormat::Vtk => vtk_string(field, mesh, name)?,
        OutputFormat::Csv => csv_string(field, mesh, name)?,
    };
    write_text(path, &content)
}

/// Node count → subdivision count: nn must be (n+1)² for some n ≥ 1.
fn infer_n(nn: usize, line: usize) -> Result<usize> {
    let side = (nn as f64).sqrt().round() as usize;
    if side < 2 || side * side != nn {
        return Err(Error::FieldParse {
            line,
            message: format!("{nn} nodes is not (n+1)^2 for any subdivision count n >= 1"),
        });
    }
    Ok(side - 1)
}

/// Line cursor that skips blank lines and tracks 1-based numbers for
/// error reporting.
struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().enumerate(),
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (i, raw) in self.lines.by_ref() {
            let trimmed = raw.trim();
            if !trimmed.is_empty() {
                return Ok((i + 1, trimmed));
            }
        }
        Err(Error::FieldParse {
            line: 0,
            message: "unexpected end of file".to_string(),
        })
    }

    fn expect_prefix(&mut self, prefix: &str) -> Result<(usize, &'a str)> {
        let (line, text) = self.next()?;
        if !text.starts_with(prefix) {
            return Err(Error::FieldParse {
                line,
                message: format!("expected a line starting with {prefix:?}, got {text:?}"),
            });
        }
        Ok((line, text))
    }
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize> {
    token.parse().map_err(|_| Error::FieldParse {
        line,
        message: format!("cannot parse {what} from {token:?}"),
    })
}

fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::FieldParse {
        line,
        message: format!("cannot parse {what} from {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::FieldParse {
            line,
            message: format!("{what} is not finite: {token:?}"),
        });
    }
    Ok(v)
}

/// Parses a field from the legacy-VTK layout produced by [`vtk_string`].
pub fn parse_field_vtk(text: &str) -> Result<Field> {
    let mut cur = Cursor::new(text);
    cur.expect_prefix("# vtk DataFile")?;
    cur.next()?; // title, free-form
    let (line, ascii) = cur.next()?;
    if ascii != "ASCII" {
        return Err(Error::FieldParse {
            line,
            message: format!("expected ASCII encoding, got {ascii:?}"),
        });
    }
    cur.expect_prefix("DATASET UNSTRUCTURED_GRID")?;

    let (line, points) = cur.expect_prefix("POINTS")?;
    let nn = parse_usize(
        points.split_whitespace().nth(1).unwrap_or(""),
        line,
        "point count",
    )?;
    let n = infer_n(nn, line)?;
    for _ in 0..nn {
        let (line, coords) = cur.next()?;
        let mut it = coords.split_whitespace();
        for what in ["x coordinate", "y coordinate", "z coordinate"] {
            parse_f64(it.next().unwrap_or(""), line, what)?;
        }
    }

    let (line, cells) = cur.expect_prefix("CELLS")?;
    let nt = parse_usize(
        cells.split_whitespace().nth(1).unwrap_or(""),
        line,
        "cell count",
    )?;
    if nt != 2 * n * n {
        return Err(Error::FieldParse {
            line,
            message: format!("expected {} triangles for n = {n}, got {nt}", 2 * n * n),
        });
    }
    for _ in 0..nt {
        let (line, tri) = cur.next()?;
        let mut it = tri.split_whitespace();
        let count = parse_usize(it.next().unwrap_or(""), line, "cell size")?;
        if count != 3 {
            return Err(Error::FieldParse {
                line,
                message: format!("expected triangle cells of size 3, got {count}"),
            });
        }
        for what in ["first vertex", "second vertex", "third vertex"] {
            let idx = parse_usize(it.next().unwrap_or(""), line, what)?;
            if idx >= nn {
                return Err(Error::FieldParse {
                    line,
                    message: format!("vertex index {idx} out of range for {nn} points"),
                });
            }
        }
    }

    cur.expect_prefix("CELL_TYPES")?;
    for _ in 0..nt {
        let (line, ty) = cur.next()?;
        if ty != "5" {
            return Err(Error::FieldParse {
                line,
                message: format!("expected VTK cell type 5 (triangle), got {ty:?}"),
            });
        }
    }

    let (line, pd) = cur.expect_prefix("POINT_DATA")?;
    let nn2 = parse_usize(
        pd.split_whitespace().nth(1).unwrap_or(""),
        line,
        "point-data count",
    )?;
    if nn2 != nn {
        return Err(Error::FieldParse {
            line,
            message: format!("POINT_DATA count {nn2} does not match {nn} points"),
        });
    }
    cur.expect_prefix("SCALARS")?;
    cur.expect_prefix("LOOKUP_TABLE")?;

    let mut coeffs = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (line, value) = cur.next()?;
        coeffs.push(parse_f64(value, line, "field value")?);
    }
    Field::from_coeffs(n, coeffs)
}

/// Parses a field from the CSV layout produced by [`csv_string`]; node
/// coordinates are cross-checked against the lexicographic grid they
/// claim to sample.
pub fn parse_field_csv(text: &str) -> Result<Field> {
    let mut cur = Cursor::new(text);
    let (line, header) = cur.next()?;
    if header.split(',').count() != 3 || !header.starts_with("x,y,") {
        return Err(Error::FieldParse {
            line,
            message: format!("expected header \"x,y,<name>\", got {header:?}"),
        });
    }

    let mut rows = Vec::new();
    while let Ok((line, row)) = cur.next() {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::FieldParse {
                line,
                message: format!("expected 3 comma-separated fields, got {}", fields.len()),
            });
        }
        let x = parse_f64(fields[0], line, "x coordinate")?;
        let y = parse_f64(fields[1], line, "y coordinate")?;
        let v = parse_f64(fields[2], line, "field value")?;
        rows.push((line, x, y, v));
    }

    let n = infer_n(rows.len(), rows.last().map(|r| r.0).unwrap_or(1))?;
    let h = 1.0 / n as f64;
    let side = n + 1;
    let mut coeffs = Vec::with_capacity(rows.len());
    for (i, (line, x, y, v)) in rows.into_iter().enumerate() {
        let ex = (i % side) as f64 * h;
        let ey = (i / side) as f64 * h;
        if (x - ex).abs() > 1e-12 || (y - ey).abs() > 1e-12 {
            return Err(Error::FieldParse {
                line,
                message: format!(
                    "row {i} is at ({x}, {y}) but lexicographic order for n = {n} puts it at ({ex}, {ey})"
                ),
            });
        }
        coeffs.push(v);
    }
    Field::from_coeffs(n, coeffs)
}

/// Reads a field file written by [`write_field`].
pub fn read_field(path: &Path, format: OutputFormat) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    match format {
        OutputFormat::Vtk => parse_field_vtk(&text),
        OutputFormat::Csv => parse_field_csv(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::interpolate_nodal;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(n: usize, seed: u64) -> Field {
        let mut rng = StdRng::seed_from_u64(seed);
        let coeffs = (0..(n + 1) * (n + 1))
            .map(|_| rng.gen_range(-10.0..10.0) * rng.gen_range(1e-8..1e8))
            .collect();
        Field::from_coeffs(n, coeffs).unwrap()
    }

    #[test]
    fn vtk_layout_for_the_two_by_two_mesh_is_exact() {
        let mesh = Mesh::structured(2).unwrap();
        let field = interpolate_nodal(|x, y| x + 10.0 * y, &mesh).unwrap();
        let text = vtk_string(&field, &mesh, "demo").unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert_eq!(lines[4], "POINTS 9 double");
        assert_eq!(lines[5], "0 0 0");
        assert_eq!(lines[6], "0.5 0 0");
        assert_eq!(lines[13], "1 1 0");
        assert_eq!(lines[14], "CELLS 8 32");
        // first square: lower-left → upper-right diagonal
        assert_eq!(lines[15], "3 0 1 4");
        assert_eq!(lines[16], "3 0 4 3");
        assert_eq!(lines[23], "CELL_TYPES 8");
        assert!(lines[24..32].iter().all(|l| *l == "5"));
        assert_eq!(lines[32], "POINT_DATA 9");
        assert_eq!(lines[33], "SCALARS demo double 1");
        assert_eq!(lines[34], "LOOKUP_TABLE default");
        assert_eq!(lines[35], "0"); // value at (0,0)
        assert_eq!(lines[36], "0.5"); // value at (0.5,0)
        assert_eq!(lines[43], "11"); // value at (1,1)
        assert_eq!(lines.len(), 44);
    }

    #[test]
    fn csv_layout_is_lexicographic_with_header() {
        let mesh = Mesh::structured(2).unwrap();
        let field = interpolate_nodal(|x, y| x - y, &mesh).unwrap();
        let text = csv_string(&field, &mesh, "t").unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,t");
        assert_eq!(lines[1], "0,0,0");
        assert_eq!(lines[2], "0.5,0,0.5");
        assert_eq!(lines[4], "0,0.5,-0.5");
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn vtk_round_trip_is_bit_exact() {
        let mesh = Mesh::structured(7).unwrap();
        let field = random_field(7, 41);
        let text = vtk_string(&field, &mesh, "psi").unwrap();
        let back = parse_field_vtk(&text).unwrap();
        assert_eq!(back.n, 7);
        assert_eq!(back.coeffs, field.coeffs);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mesh = Mesh::structured(5).unwrap();
        let field = random_field(5, 99);
        let text = csv_string(&field, &mesh, "theta").unwrap();
        let back = parse_field_csv(&text).unwrap();
        assert_eq!(back.n, 5);
        assert_eq!(back.coeffs, field.coeffs);
    }

    #[test]
    fn file_round_trip_through_write_and_read() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::structured(4).unwrap();
        let field = random_field(4, 7);
        for format in [OutputFormat::Vtk, OutputFormat::Csv] {
            let path = dir.path().join(format!("field.{}", format.extension()));
            write_field(&path, &field, &mesh, "u h", format).unwrap();
            let back = read_field(&path, format).unwrap();
            assert_eq!(back.coeffs, field.coeffs, "{format:?}");
        }
        // whitespace in the name must not corrupt the VTK header
        let text = std::fs::read_to_string(dir.path().join("field.vtk")).unwrap();
        assert!(text.contains("SCALARS u_h double 1"));
    }

    #[test]
    fn write_text_replaces_existing_files_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        write_text(&path, "first\n").unwrap();
        write_text(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        // no temporary files left behind
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|f| f.to_string_lossy().contains(".tmp"))
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mesh = Mesh::structured(2).unwrap();
        let field = interpolate_nodal(|x, _| x, &mesh).unwrap();
        let good = vtk_string(&field, &mesh, "f").unwrap();

        // corrupt one coordinate line ("0.5 0 0" is 1-based line 7)
        let bad = good.replace("\n0.5 0 0\n", "\n0.5 zzz 0\n");
        match parse_field_vtk(&bad) {
            Err(Error::FieldParse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected FieldParse, got {other:?}"),
        }

        // truncate the value block
        let cut = good.lines().take(40).collect::<Vec<_>>().join("\n");
        match parse_field_vtk(&cut) {
            Err(Error::FieldParse { line: 0, message }) => {
                assert!(message.contains("end of file"))
            }
            other => panic!("expected end-of-file FieldParse, got {other:?}"),
        }

        // node count that is not (n+1)^2
        let csv = "x,y,f\n0,0,1\n1,0,2\n0,1,3\n";
        match parse_field_csv(csv) {
            Err(Error::FieldParse { message, .. }) => assert!(message.contains("(n+1)^2")),
            other => panic!("expected FieldParse, got {other:?}"),
        }

        // wrong column count
        let csv = "x,y,f\n0,0\n";
        assert!(matches!(
            parse_field_csv(csv),
            Err(Error::FieldParse { line: 2, .. })
        ));

        // coordinates that contradict lexicographic order
        let mesh1 = Mesh::structured(1).unwrap();
        let f1 = interpolate_nodal(|_, _| 1.0, &mesh1).unwrap();
        let good_csv = csv_string(&f1, &mesh1, "f").unwrap();
        let shuffled = good_csv.replace("0,1,1", "0,0.75,1");
        match parse_field_csv(&shuffled) {
            Err(Error::FieldParse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("lexicographic"));
            }
            other => panic!("expected FieldParse, got {other:?}"),
        }
    }

    #[test]
    fn vtk_rejects_foreign_headers() {
        assert!(parse_field_vtk("not a vtk file\n").is_err());
        let text = "# vtk DataFile Version 3.0\nt\nBINARY\nDATASET UNSTRUCTURED_GRID\n";
        match parse_field_vtk(text) {
            Err(Error::FieldParse { line: 3, message }) => assert!(message.contains("ASCII")),
            other => panic!("expected FieldParse on encoding, got {other:?}"),
        }
    }

    #[test]
    fn read_field_maps_missing_files_to_io_errors() {
        let err = read_field(Path::new("/nonexistent/f.vtk"), OutputFormat::Vtk).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn format_parses_from_strings() {
        assert_eq!("vtk".parse::<OutputFormat>().unwrap(), OutputFormat::Vtk);
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("json".parse::<OutputFormat>().is_err());
    }
}
