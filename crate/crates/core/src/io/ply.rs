//! PLY point clouds, ASCII and binary little-endian.
//!
//! Only the `vertex` element is read. `x, y, z` must be `float` or `double`;
//! `red, green, blue` (or `r, g, b`) as `uchar` become colours. Any other
//! vertex property is carried through verbatim in ASCII files and dropped,
//! with a warning, in binary ones.

use crate::error::{Error, Result};

const CTX: &str = "ply";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub ty: ScalarType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Coord(usize),
    Color(usize),
    Extra(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    properties: Vec<Property>,
    positions: Vec<[f64; 3]>,
    colors: Option<Vec<[u8; 3]>>,
    /// Per point, the raw ASCII tokens of the extra properties.
    extras: Vec<Vec<String>>,
}

fn color_channel(p: &Property) -> Option<usize> {
    if p.ty != ScalarType::U8 {
        return None;
    }
    ["red", "green", "blue"]
        .iter()
        .position(|n| *n == p.name)
        .or_else(|| ["r", "g", "b"].iter().position(|n| *n == p.name))
}

fn roles(properties: &[Property]) -> Result<Vec<Role>> {
    let mut color_seen = [0usize; 3];
    for p in properties {
        if let Some(c) = color_channel(p) {
            color_seen[c] += 1;
        }
    }
    // Colours only count as a complete, unambiguous triple.
    let colors = color_seen == [1; 3];
    let mut coord_seen = [false; 3];
    let mut extra = 0;
    let mut out = Vec::with_capacity(properties.len());
    for p in properties {
        let role = if let Some(c) = ["x", "y", "z"].iter().position(|n| *n == p.name) {
            if !matches!(p.ty, ScalarType::F32 | ScalarType::F64) {
                return Err(Error::InvalidInput(format!(
                    "ply property {} must be float or double, found {}",
                    p.name,
                    p.ty.name()
                )));
            }
            if std::mem::replace(&mut coord_seen[c], true) {
                return Err(Error::InvalidInput(format!(
                    "duplicate ply property {}",
                    p.name
                )));
            }
            Role::Coord(c)
        } else if let Some(c) = color_channel(p).filter(|_| colors) {
            Role::Color(c)
        } else {
            extra += 1;
            Role::Extra(extra - 1)
        };
        out.push(role);
    }
    if coord_seen != [true; 3] {
        return Err(Error::InvalidInput(
            "ply vertex element needs x, y and z".into(),
        ));
    }
    Ok(out)
}

impl PointCloud {
    /// Double-precision positions, no colours.
    pub fn from_positions(positions: Vec<[f64; 3]>) -> Self {
        let properties = ["x", "y", "z"]
            .iter()
            .map(|n| Property {
                name: n.to_string(),
                ty: ScalarType::F64,
            })
            .collect();
        let extras = vec![Vec::new(); positions.len()];
        Self {
            properties,
            positions,
            colors: None,
            extras,
        }
    }

    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.len() != self.positions.len() {
            return Err(Error::InvalidInput(
                "colour count differs from point count".into(),
            ));
        }
        if self.colors.is_none() {
            for n in ["red", "green", "blue"] {
                self.properties.push(Property {
                    name: n.into(),
                    ty: ScalarType::U8,
                });
            }
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn properties(&self) -> &[Property] {
        &self.properties
    }

    pub fn has_extras(&self) -> bool {
        self.extras.first().is_some_and(|e| !e.is_empty())
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            properties: self.properties.clone(),
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            extras: indices.iter().map(|&i| self.extras[i].clone()).collect(),
        }
    }

    fn without_extras(&self) -> (Vec<Property>, Vec<Role>) {
        let roles = roles(&self.properties).expect("layout validated on construction");
        self.properties
            .iter()
            .zip(roles)
            .filter(|(_, r)| !matches!(r, Role::Extra(_)))
            .map(|(p, r)| (p.clone(), r))
            .unzip()
    }
}

struct Header {
    encoding: Encoding,
    vertex_count: usize,
    properties: Vec<Property>,
    /// Other elements follow the vertices.
    trailing_elements: bool,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut lineno = 0;
    let mut next_line = || -> Option<(usize, String)> {
        if offset >= bytes.len() {
            return None;
        }
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |p| offset + p);
        let line = String::from_utf8_lossy(&bytes[offset..end])
            .trim_end_matches('\r')
            .to_string();
        offset = (end + 1).min(bytes.len());
        lineno += 1;
        Some((lineno, line))
    };
    match next_line() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(CTX, 1, "missing 'ply' magic")),
    }
    let mut encoding = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex = false;
    let mut trailing_elements = false;
    loop {
        let Some((ln, line)) = next_line() else {
            return Err(Error::parse(CTX, lineno, "header has no end_header"));
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["end_header"] => break,
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLittleEndian,
                    other => {
                        return Err(Error::parse(CTX, ln, format!("unsupported format {other}")))
                    }
                });
            }
            ["element", name, count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::parse(CTX, ln, format!("bad element count {count:?}")))?;
                if *name == "vertex" {
                    if vertex_count.is_some() {
                        return Err(Error::parse(CTX, ln, "duplicate vertex element"));
                    }
                    vertex_count = Some(count);
                    in_vertex = true;
                } else {
                    if vertex_count.is_none() {
                        return Err(Error::parse(CTX, ln, "vertex must be the first element"));
                    }
                    in_vertex = false;
                    trailing_elements = true;
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::parse(
                    CTX,
                    ln,
                    "list properties on vertices are not supported",
                ));
            }
            ["property", ty, name] if in_vertex => {
                let ty = ScalarType::parse(ty)
                    .ok_or_else(|| Error::parse(CTX, ln, format!("unknown type {ty}")))?;
                properties.push(Property {
                    name: name.to_string(),
                    ty,
                });
            }
            ["property", ..] if !in_vertex => {}
            _ => {
                return Err(Error::parse(
                    CTX,
                    ln,
                    format!("unexpected header line {line:?}"),
                ))
            }
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| Error::parse(CTX, lineno, "missing format line"))?,
        vertex_count: vertex_count
            .ok_or_else(|| Error::parse(CTX, lineno, "missing vertex element"))?,
        properties,
        trailing_elements,
        body_offset: offset,
    })
}

/// Encoding declared in the header.
pub fn ply_encoding(bytes: &[u8]) -> Result<Encoding> {
    parse_header(bytes).map(|h| h.encoding)
}

pub fn read_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let layout = roles(&header.properties)?;
    if header.trailing_elements {
        log::warn!("ply: ignoring elements other than vertex");
    }
    let n = header.vertex_count;
    let mut positions = Vec::with_capacity(n);
    let has_color = layout.iter().any(|r| matches!(r, Role::Color(_)));
    let mut colors = has_color.then(|| Vec::with_capacity(n));
    let extra_count = layout
        .iter()
        .filter(|r| matches!(r, Role::Extra(_)))
        .count();
    let mut extras = Vec::with_capacity(n);
    let mut properties = header.properties.clone();

    match header.encoding {
        Encoding::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body_offset..])
                .map_err(|_| Error::parse(CTX, 0, "ascii body is not UTF-8"))?;
            let header_lines = bytes[..header.body_offset]
                .iter()
                .filter(|&&b| b == b'\n')
                .count();
            let mut lines = body
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty());
            for _ in 0..n {
                let Some((i, line)) = lines.next() else {
                    return Err(Error::parse(
                        CTX,
                        header_lines + body.lines().count(),
                        "fewer vertices than declared",
                    ));
                };
                let ln = header_lines + i + 1;
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() != layout.len() {
                    return Err(Error::parse(
                        CTX,
                        ln,
                        format!("expected {} values, found {}", layout.len(), tokens.len()),
                    ));
                }
                let mut p = [0.0; 3];
                let mut c = [0u8; 3];
                let mut e = Vec::with_capacity(extra_count);
                for ((tok, role), prop) in tokens.iter().zip(&layout).zip(&header.properties) {
                    match role {
                        Role::Coord(k) => {
                            let bad = || {
                                Error::parse(CTX, ln, format!("bad {} value {tok:?}", prop.name))
                            };
                            p[*k] = match prop.ty {
                                ScalarType::F32 => tok.parse::<f32>().map_err(|_| bad())? as f64,
                                _ => tok.parse::<f64>().map_err(|_| bad())?,
                            };
                        }
                        Role::Color(k) => {
                            c[*k] = tok.parse::<u8>().map_err(|_| {
                                Error::parse(CTX, ln, format!("bad {} value {tok:?}", prop.name))
                            })?;
                        }
                        Role::Extra(_) => e.push(tok.to_string()),
                    }
                }
                positions.push(p);
                if let Some(colors) = colors.as_mut() {
                    colors.push(c);
                }
                extras.push(e);
            }
        }
        Encoding::BinaryLittleEndian => {
            let stride: usize = header.properties.iter().map(|p| p.ty.size()).sum();
            let body = &bytes[header.body_offset..];
            if body.len() < stride * n {
                return Err(Error::InvalidInput(format!(
                    "ply body holds {} bytes, {} vertices need {}",
                    body.len(),
                    n,
                    stride * n
                )));
            }
            if extra_count > 0 {
                let names: Vec<&str> = header
                    .properties
                    .iter()
                    .zip(&layout)
                    .filter(|(_, r)| matches!(r, Role::Extra(_)))
                    .map(|(p, _)| p.name.as_str())
                    .collect();
                log::warn!("ply: dropping unsupported binary properties {names:?}");
                properties = header
                    .properties
                    .iter()
                    .zip(&layout)
                    .filter(|(_, r)| !matches!(r, Role::Extra(_)))
                    .map(|(p, _)| p.clone())
                    .collect();
            }
            for row in body.chunks_exact(stride).take(n) {
                let mut off = 0;
                let mut p = [0.0; 3];
                let mut c = [0u8; 3];
                for (prop, role) in header.properties.iter().zip(&layout) {
                    let v = &row[off..off + prop.ty.size()];
                    match role {
                        Role::Coord(k) => p[*k] = prop.ty.read_le(v),
                        Role::Color(k) => c[*k] = v[0],
                        Role::Extra(_) => {}
                    }
                    off += prop.ty.size();
                }
                positions.push(p);
                if let Some(colors) = colors.as_mut() {
                    colors.push(c);
                }
                extras.push(Vec::new());
            }
        }
    }
    Ok(PointCloud {
        properties,
        positions,
        colors,
        extras,
    })
}

fn format_coord(ty: ScalarType, v: f64) -> String {
    match ty {
        ScalarType::F32 => format!("{}", v as f32),
        _ => format!("{v}"),
    }
}

pub fn write_ply(cloud: &PointCloud, encoding: Encoding) -> Vec<u8> {
    let (properties, layout) = match encoding {
        Encoding::Ascii => (
            cloud.properties.clone(),
            roles(&cloud.properties).expect("valid layout"),
        ),
        Encoding::BinaryLittleEndian => {
            if cloud.has_extras() {
                log::warn!("ply: extra properties are not written in binary mode");
            }
            cloud.without_extras()
        }
    };
    let mut header = String::from("ply\n");
    header.push_str(match encoding {
        Encoding::Ascii => "format ascii 1.0\n",
        Encoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    for p in &properties {
        header.push_str(&format!("property {} {}\n", p.ty.name(), p.name));
    }
    header.push_str("end_header\n");
    let mut out = header.into_bytes();

    for i in 0..cloud.len() {
        let pos = cloud.positions[i];
        let col = cloud.colors.as_ref().map_or([0; 3], |c| c[i]);
        match encoding {
            Encoding::Ascii => {
                let tokens: Vec<String> = properties
                    .iter()
                    .zip(&layout)
                    .map(|(p, r)| match r {
                        Role::Coord(k) => format_coord(p.ty, pos[*k]),
                        Role::Color(k) => col[*k].to_string(),
                        Role::Extra(k) => cloud.extras[i][*k].clone(),
                    })
                    .collect();
                out.extend_from_slice(tokens.join(" ").as_bytes());
                out.push(b'\n');
            }
            Encoding::BinaryLittleEndian => {
                for (p, r) in properties.iter().zip(&layout) {
                    match (r, p.ty) {
                        (Role::Coord(k), ScalarType::F32) => {
                            out.extend_from_slice(&(pos[*k] as f32).to_le_bytes())
                        }
                        (Role::Coord(k), _) => out.extend_from_slice(&pos[*k].to_le_bytes()),
                        (Role::Color(k), _) => out.push(col[*k]),
                        (Role::Extra(_), _) => unreachable!("extras removed above"),
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ASCII: &str = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\n\
property float x\nproperty float y\nproperty float z\nproperty float nx\n\
property uchar red\nproperty uchar green\nproperty uchar blue\nproperty float opacity\n\
element face 0\nproperty list uchar int vertex_indices\nend_header\n\
0 0 0 0.25 255 0 0 0.5\n1.5 -2 3 1e-3 0 128 7 1\n0.1 0.2 0.3 -0 1 2 3 0.75\n";

    #[test]
    fn ascii_extras_pass_through() {
        let cloud = read_ply(ASCII.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.positions()[1], [1.5, -2.0, 3.0]);
        assert_eq!(cloud.colors().unwrap()[1], [0, 128, 7]);
        assert!(cloud.has_extras());
        let out = String::from_utf8(write_ply(&cloud, Encoding::Ascii)).unwrap();
        assert!(out.contains("0.1 0.2 0.3 -0 1 2 3 0.75\n"), "{out}");
        assert!(out.contains("1e-3"));
        assert_eq!(read_ply(out.as_bytes()).unwrap(), cloud);
    }

    #[test]
    fn binary_drops_extras() {
        let cloud = read_ply(ASCII.as_bytes()).unwrap();
        let bin = write_ply(&cloud, Encoding::BinaryLittleEndian);
        let back = read_ply(&bin).unwrap();
        assert_eq!(back.positions(), cloud.positions());
        assert_eq!(back.colors(), cloud.colors());
        assert!(!back.has_extras());
        assert_eq!(back.properties().len(), 6);
    }

    #[test]
    fn binary_reader_skips_unknown_fields() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n\
property double x\nproperty short tag\nproperty double y\nproperty double z\nend_header\n"
            .to_vec();
        for (p, tag) in [([1.0f64, 2.0, 3.0], 7i16), ([-4.0, 0.5, 1e300], -1)] {
            bytes.extend_from_slice(&p[0].to_le_bytes());
            bytes.extend_from_slice(&tag.to_le_bytes());
            bytes.extend_from_slice(&p[1].to_le_bytes());
            bytes.extend_from_slice(&p[2].to_le_bytes());
        }
        let cloud = read_ply(&bytes).unwrap();
        assert_eq!(cloud.positions(), &[[1.0, 2.0, 3.0], [-4.0, 0.5, 1e300]]);
        assert!(cloud.colors().is_none());
    }

    #[test]
    fn double_round_trip_both_encodings() {
        let pts = vec![[0.1, 1.0 / 3.0, -7e-9], [1e10, -0.0, 2.5]];
        let cloud = PointCloud::from_positions(pts.clone())
            .with_colors(vec![[1, 2, 3], [4, 5, 6]])
            .unwrap();
        for enc in [Encoding::Ascii, Encoding::BinaryLittleEndian] {
            let back = read_ply(&write_ply(&cloud, enc)).unwrap();
            assert_eq!(back, cloud);
        }
        let sel = cloud.select(&[1]);
        assert_eq!(sel.positions(), &pts[1..]);
        assert_eq!(sel.colors().unwrap(), &[[4, 5, 6]]);
    }

    #[test]
    fn header_errors() {
        assert!(read_ply(b"plx\n").is_err());
        assert!(read_ply(b"ply\nformat binary_big_endian 1.0\nend_header\n").is_err());
        let no_z = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nend_header\n";
        assert!(read_ply(no_z.as_bytes()).is_err());
        let int_x = "ply\nformat ascii 1.0\nelement vertex 0\nproperty int x\nproperty float y\nproperty float z\nend_header\n";
        assert!(read_ply(int_x.as_bytes()).is_err());
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        assert!(read_ply(short.as_bytes()).is_err());
    }
}
