//! PLY mesh reading and writing.
//!
//! Supported: `format ascii 1.0` and `format binary_little_endian 1.0`, any
//! number of elements, scalar and list properties of the standard types.
//! Only `vertex` (x, y, z) and `face` (`vertex_indices` or `vertex_index`)
//! are kept; every other element and property is parsed and dropped.
//! Polygons with more than three corners are fan-triangulated from their
//! first index.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{GeometryError, Point3, TriangleMesh};

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed PLY header (line {line}): {message}")]
    Header { line: usize, message: String },
    #[error("binary big-endian PLY is not supported; convert the file to ascii or binary_little_endian")]
    BigEndian,
    #[error("unexpected end of data while reading element '{element}' #{index}")]
    UnexpectedEof { element: String, index: usize },
    #[error("invalid value '{token}' in element '{element}' #{index}")]
    InvalidValue {
        element: String,
        index: usize,
        token: String,
    },
    #[error("vertex element is missing property '{0}'")]
    MissingVertexProperty(&'static str),
    #[error("face {face} has {count} indices; at least 3 are required")]
    FaceTooSmall { face: usize, count: usize },
    #[error("face {face} references vertex {index}, but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error(transparent)]
    Mesh(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
}

fn header_error(line: usize, message: impl Into<String>) -> PlyError {
    PlyError::Header {
        line,
        message: message.into(),
    }
}

fn read_header<R: BufRead>(reader: &mut R) -> Result<Header, PlyError> {
    let mut line_no = 0;
    let mut buf = Vec::new();
    let mut next_line = |reader: &mut R, line_no: &mut usize| -> Result<Option<String>, PlyError> {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(None);
        }
        *line_no += 1;
        let text = String::from_utf8(buf.clone()).map_err(|_| header_error(*line_no, "header is not ASCII"))?;
        Ok(Some(text.trim_end_matches(['\n', '\r']).to_string()))
    };

    match next_line(reader, &mut line_no)? {
        Some(l) if l.trim() == "ply" => {}
        _ => return Err(header_error(1, "missing 'ply' magic")),
    }

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(reader, &mut line_no)?
            .ok_or_else(|| header_error(line_no, "header ended before 'end_header'"))?;
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "comment" | "obj_info" => {}
            "format" => {
                let kind = tokens.next().unwrap_or("");
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => return Err(PlyError::BigEndian),
                    other => return Err(header_error(line_no, format!("unknown format '{other}'"))),
                });
            }
            "element" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| header_error(line_no, "element without a name"))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_error(line_no, format!("element '{name}' has no valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_error(line_no, "property before any element"))?;
                let ty = tokens.next().unwrap_or("");
                let kind = if ty == "list" {
                    let count = tokens.next().and_then(Scalar::parse);
                    let item = tokens.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) if count.is_integer() => PropertyKind::List { count, item },
                        _ => return Err(header_error(line_no, "invalid list property types")),
                    }
                } else {
                    PropertyKind::Scalar(
                        Scalar::parse(ty).ok_or_else(|| header_error(line_no, format!("unknown type '{ty}'")))?,
                    )
                };
                let name = tokens
                    .next()
                    .ok_or_else(|| header_error(line_no, "property without a name"))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            "end_header" => break,
            other => return Err(header_error(line_no, format!("unexpected keyword '{other}'"))),
        }
    }

    let format = format.ok_or_else(|| header_error(line_no, "missing 'format' line"))?;
    Ok(Header { format, elements })
}

/// Source of scalar values for the body, ASCII or binary.
trait ValueSource {
    fn next(&mut self, ty: Scalar, element: &str, index: usize) -> Result<f64, PlyError>;
}

struct AsciiSource<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl ValueSource for AsciiSource<'_> {
    fn next(&mut self, ty: Scalar, element: &str, index: usize) -> Result<f64, PlyError> {
        let token = self.tokens.next().ok_or_else(|| PlyError::UnexpectedEof {
            element: element.to_string(),
            index,
        })?;
        let invalid = || PlyError::InvalidValue {
            element: element.to_string(),
            index,
            token: token.to_string(),
        };
        let value = if ty.is_integer() {
            token.parse::<i64>().map_err(|_| invalid())? as f64
        } else {
            token.parse::<f64>().map_err(|_| invalid())?
        };
        if !value.is_finite() {
            return Err(invalid());
        }
        Ok(value)
    }
}

struct BinarySource<R: Read> {
    reader: R,
}

impl<R: Read> ValueSource for BinarySource<R> {
    fn next(&mut self, ty: Scalar, element: &str, index: usize) -> Result<f64, PlyError> {
        let mut buf = [0u8; 8];
        let bytes = &mut buf[..ty.size()];
        self.reader.read_exact(bytes).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => PlyError::UnexpectedEof {
                element: element.to_string(),
                index,
            },
            _ => PlyError::Io(e),
        })?;
        let value = match ty {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        };
        if !value.is_finite() {
            return Err(PlyError::InvalidValue {
                element: element.to_string(),
                index,
                token: format!("{value}"),
            });
        }
        Ok(value)
    }
}

fn read_body(header: &Header, source: &mut dyn ValueSource) -> Result<TriangleMesh, PlyError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex_count = None;
    let mut polygon = Vec::new();

    for element in &header.elements {
        let is_vertex = element.name == "vertex";
        let is_face = element.name == "face";
        let (mut ix, mut iy, mut iz) = (None, None, None);
        let mut face_list = None;
        if is_vertex {
            for (i, p) in element.properties.iter().enumerate() {
                match (p.name.as_str(), &p.kind) {
                    ("x", PropertyKind::Scalar(_)) => ix = Some(i),
                    ("y", PropertyKind::Scalar(_)) => iy = Some(i),
                    ("z", PropertyKind::Scalar(_)) => iz = Some(i),
                    _ => {}
                }
            }
            ix.ok_or(PlyError::MissingVertexProperty("x"))?;
            iy.ok_or(PlyError::MissingVertexProperty("y"))?;
            iz.ok_or(PlyError::MissingVertexProperty("z"))?;
            vertices.reserve(element.count);
        }
        if is_face {
            face_list = element
                .properties
                .iter()
                .position(|p| {
                    matches!(p.kind, PropertyKind::List { .. })
                        && (p.name == "vertex_indices" || p.name == "vertex_index")
                })
                .or_else(|| {
                    element
                        .properties
                        .iter()
                        .position(|p| matches!(p.kind, PropertyKind::List { .. }))
                });
        }

        for index in 0..element.count {
            let mut xyz = [0.0; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop.kind {
                    PropertyKind::Scalar(ty) => {
                        let v = source.next(ty, &element.name, index)?;
                        if is_vertex {
                            if Some(pi) == ix {
                                xyz[0] = v;
                            } else if Some(pi) == iy {
                                xyz[1] = v;
                            } else if Some(pi) == iz {
                                xyz[2] = v;
                            }
                        }
                    }
                    PropertyKind::List { count, item } => {
                        let n = source.next(count, &element.name, index)?;
                        if n < 0.0 {
                            return Err(PlyError::InvalidValue {
                                element: element.name.clone(),
                                index,
                                token: format!("{n}"),
                            });
                        }
                        let keep = is_face && Some(pi) == face_list;
                        polygon.clear();
                        for _ in 0..n as usize {
                            let v = source.next(item, &element.name, index)?;
                            if keep {
                                polygon.push(v as i64);
                            }
                        }
                        if keep {
                            push_polygon(&polygon, index, vertex_count.unwrap_or(0), &mut triangles)?;
                        }
                    }
                }
            }
            if is_vertex {
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
        if is_vertex {
            vertex_count = Some(vertices.len());
        }
    }

    Ok(TriangleMesh::new(vertices, triangles)?)
}

fn push_polygon(polygon: &[i64], face: usize, vertex_count: usize, out: &mut Vec<[u32; 3]>) -> Result<(), PlyError> {
    if polygon.len() < 3 {
        return Err(PlyError::FaceTooSmall {
            face,
            count: polygon.len(),
        });
    }
    if let Some(&index) = polygon.iter().find(|&&i| i < 0 || i as usize >= vertex_count) {
        return Err(PlyError::IndexOutOfRange {
            face,
            index,
            vertex_count,
        });
    }
    for k in 1..polygon.len() - 1 {
        out.push([polygon[0] as u32, polygon[k] as u32, polygon[k + 1] as u32]);
    }
    Ok(())
}

/// Parses a PLY stream into a mesh (diameter computed, vertex order kept).
pub fn read_ply<R: BufRead>(mut reader: R) -> Result<TriangleMesh, PlyError> {
    let header = read_header(&mut reader)?;
    match header.format {
        PlyFormat::Ascii => {
            let mut text = String::new();
            reader.read_to_string(&mut text)?;
            let mut source = AsciiSource {
                tokens: text.split_ascii_whitespace(),
            };
            read_body(&header, &mut source)
        }
        PlyFormat::BinaryLittleEndian => {
            let mut source = BinarySource { reader };
            read_body(&header, &mut source)
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, PlyError> {
    let file = File::open(path.as_ref())?;
    read_ply(BufReader::new(file))
}

/// Writes vertices as `double` and faces as `uchar`/`int` lists.
pub fn write_ply<W: Write>(mesh: &TriangleMesh, mut out: W, format: PlyFormat) -> std::io::Result<()> {
    let format_name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply")?;
    writeln!(out, "format {format_name} 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices().len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element face {}", mesh.triangles().len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    match format {
        PlyFormat::Ascii => {
            for v in mesh.vertices() {
                writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
            }
            for t in mesh.triangles() {
                writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for v in mesh.vertices() {
                for c in [v.x, v.y, v.z] {
                    out.write_all(&c.to_le_bytes())?;
                }
            }
            for t in mesh.triangles() {
                out.write_all(&[3u8])?;
                for &i in t {
                    out.write_all(&(i as i32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>, format: PlyFormat) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_ply(mesh, &mut out, format)?;
    out.flush()
}
