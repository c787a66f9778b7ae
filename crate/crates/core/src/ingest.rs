//! Point ingestion from whitespace/comma separated text and uncompressed LAS.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point { x, y, z }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Immutable set of finite point observations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    /// Builds a cloud, dropping non-finite points. Returns the cloud and the drop count.
    pub fn from_points(points: Vec<Point>) -> (Self, usize) {
        let before = points.len();
        let points: Vec<Point> = points.into_iter().filter(Point::is_finite).collect();
        let dropped = before - points.len();
        (PointCloud { points }, dropped)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned extent in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        let finite = [min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite());
        if !finite || min_x > max_x || min_y > max_y {
            return Err(Error::InvalidParameter(format!(
                "invalid bounding box ({min_x}, {min_y}, {max_x}, {max_y})"
            )));
        }
        Ok(BBox {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Tight bounds of all points.
pub fn bounds(pc: &PointCloud) -> Result<BBox> {
    let mut it = pc.points.iter();
    let first = it.next().ok_or(Error::EmptyInput)?;
    let mut bb = BBox {
        min_x: first.x,
        min_y: first.y,
        max_x: first.x,
        max_y: first.y,
    };
    for p in it {
        bb.min_x = bb.min_x.min(p.x);
        bb.min_y = bb.min_y.min(p.y);
        bb.max_x = bb.max_x.max(p.x);
        bb.max_y = bb.max_y.max(p.y);
    }
    Ok(bb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    XyzText,
    Las,
    #[default]
    Auto,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" | "xyz_text" | "txt" | "text" => Ok(InputFormat::XyzText),
            "las" => Ok(InputFormat::Las),
            "auto" => Ok(InputFormat::Auto),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ReadOptions {
    pub format: InputFormat,
    /// Abort on the first malformed record instead of skipping it.
    pub strict: bool,
}

/// Counters describing what the reader skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReadStats {
    pub records: usize,
    pub malformed: usize,
    pub non_finite: usize,
}

const LAS_MAGIC: &[u8; 4] = b"LASF";

/// Reads a whole point source into memory and parses it.
pub fn read_points<R: Read>(mut source: R, opts: ReadOptions) -> Result<(PointCloud, ReadStats)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_points(&bytes, opts)
}

pub fn parse_points(bytes: &[u8], opts: ReadOptions) -> Result<(PointCloud, ReadStats)> {
    let format = match opts.format {
        InputFormat::Auto if bytes.starts_with(LAS_MAGIC) => InputFormat::Las,
        InputFormat::Auto => InputFormat::XyzText,
        f => f,
    };
    let (raw, mut stats) = match format {
        InputFormat::Las => parse_las(bytes, opts.strict)?,
        _ => parse_text(bytes, opts.strict)?,
    };
    let (cloud, dropped) = PointCloud::from_points(raw);
    stats.non_finite = dropped;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((cloud, stats))
}

fn parse_text(bytes: &[u8], strict: bool) -> Result<(Vec<Point>, ReadStats)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::UnsupportedFormat(format!("text input is not UTF-8: {e}")))?;
    let mut stats = ReadStats::default();
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        stats.records += 1;
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty());
        let mut xyz = [0.0f64; 3];
        let mut ok = true;
        for v in xyz.iter_mut() {
            match fields.next().map(str::parse::<f64>) {
                Some(Ok(x)) => *v = x,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            if strict {
                return Err(Error::MalformedRecord {
                    index: lineno + 1,
                    reason: format!("expected three numeric fields in {line:?}"),
                });
            }
            stats.malformed += 1;
            continue;
        }
        points.push(Point::new(xyz[0], xyz[1], xyz[2]));
    }
    Ok((points, stats))
}

/// Fields of the public LAS header needed to decode XYZ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LasHeader {
    pub version: (u8, u8),
    pub header_size: u16,
    pub point_offset: u32,
    pub point_format: u8,
    pub record_length: u16,
    pub point_count: u64,
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn le_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn parse_las_header(bytes: &[u8]) -> Result<LasHeader> {
    if !bytes.starts_with(LAS_MAGIC) {
        return Err(Error::UnsupportedFormat("missing LASF signature".into()));
    }
    if bytes.len() < 227 {
        return Err(Error::UnsupportedFormat("truncated LAS header".into()));
    }
    let version = (bytes[24], bytes[25]);
    if version.0 != 1 || !(0..=4).contains(&version.1) {
        return Err(Error::UnsupportedFormat(format!(
            "LAS version {}.{}",
            version.0, version.1
        )));
    }
    let format_byte = bytes[104];
    if format_byte & 0xC0 != 0 {
        return Err(Error::UnsupportedFormat(
            "compressed (LAZ) point data is not supported".into(),
        ));
    }
    let point_format = format_byte & 0x3F;
    if point_format > 10 {
        return Err(Error::UnsupportedFormat(format!(
            "point data format {point_format}"
        )));
    }
    let record_length = le_u16(bytes, 105);
    if record_length < 12 {
        return Err(Error::UnsupportedFormat(format!(
            "point record length {record_length} shorter than XYZ"
        )));
    }
    let mut point_count = le_u32(bytes, 107) as u64;
    let header_size = le_u16(bytes, 94);
    if version.1 >= 4 && header_size as usize >= 255 && bytes.len() >= 255 {
        let wide = le_u64(bytes, 247);
        if wide != 0 {
            point_count = wide;
        }
    }
    Ok(LasHeader {
        version,
        header_size,
        point_offset: le_u32(bytes, 96),
        point_format,
        record_length,
        point_count,
        scale: [le_f64(bytes, 131), le_f64(bytes, 139), le_f64(bytes, 147)],
        offset: [le_f64(bytes, 155), le_f64(bytes, 163), le_f64(bytes, 171)],
    })
}

fn parse_las(bytes: &[u8], strict: bool) -> Result<(Vec<Point>, ReadStats)> {
    let h = parse_las_header(bytes)?;
    let mut stats = ReadStats::default();
    let start = h.point_offset as usize;
    let len = h.record_length as usize;
    let mut points = Vec::with_capacity(h.point_count.min(1 << 28) as usize);
    stats.records = h.point_count as usize;
    for i in 0..h.point_count {
        let at = start + i as usize * len;
        if at + len > bytes.len() {
            if strict {
                return Err(Error::MalformedRecord {
                    index: i as usize,
                    reason: "point record extends past end of input".into(),
                });
            }
            stats.malformed += (h.point_count - i) as usize;
            break;
        }
        let raw = [
            le_u32(bytes, at) as i32,
            le_u32(bytes, at + 4) as i32,
            le_u32(bytes, at + 8) as i32,
        ];
        points.push(Point::new(
            raw[0] as f64 * h.scale[0] + h.offset[0],
            raw[1] as f64 * h.scale[1] + h.offset[1],
            raw[2] as f64 * h.scale[2] + h.offset[2],
        ));
    }
    Ok((points, stats))
}

/// Writes one `x y z` line per point with six decimals.
pub fn write_xyz_text<W: Write>(pc: &PointCloud, mut out: W) -> Result<()> {
    for p in &pc.points {
        writeln!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Result<(PointCloud, ReadStats)> {
        parse_points(s.as_bytes(), ReadOptions::default())
    }

    #[test]
    fn parses_mixed_separators() {
        let (pc, _) = text("1.0 2.0 3.0\n4,5,6\n").unwrap();
        assert_eq!(
            pc.points(),
            &[Point::new(1.0, 2.0, 3.0), Point::new(4.0, 5.0, 6.0)]
        );
    }

    #[test]
    fn skips_comments_and_extra_fields() {
        let (pc, stats) = text("# x y z i\n1\t2\t3\t99\n\n 7, 8 ,9,1,2\n").unwrap();
        assert_eq!(pc.count(), 2);
        assert_eq!(pc.points()[1], Point::new(7.0, 8.0, 9.0));
        assert_eq!(stats.malformed, 0);
    }

    #[test]
    fn empty_stream_is_empty_input() {
        assert!(matches!(text(""), Err(Error::EmptyInput)));
        assert!(matches!(text("# only a comment\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn malformed_lines_skip_or_abort() {
        let (pc, stats) = text("1 2 3\nfoo bar baz\n1 2\n4 5 6\n").unwrap();
        assert_eq!(pc.count(), 2);
        assert_eq!(stats.malformed, 2);

        let strict = ReadOptions {
            format: InputFormat::XyzText,
            strict: true,
        };
        let err = parse_points(b"1 2 3\nfoo bar baz\n", strict).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { index: 2, .. }));
    }

    #[test]
    fn non_finite_points_dropped_and_counted() {
        let (pc, stats) = text("1 2 3\nNaN 1 1\n1 inf 2\n5 5 5\n").unwrap();
        assert_eq!(pc.count(), 2);
        assert_eq!(stats.non_finite, 2);
    }

    #[test]
    fn invalid_utf8_is_unsupported() {
        let err = parse_points(&[0xff, 0xfe, b'1'], ReadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn las_requires_magic() {
        let opts = ReadOptions {
            format: InputFormat::Las,
            strict: false,
        };
        assert!(matches!(
            parse_points(b"1 2 3\n", opts),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn bounds_examples() {
        let (pc, _) =
            PointCloud::from_points(vec![Point::new(0.0, 0.0, 1.0), Point::new(2.0, 3.0, 1.0)]);
        assert_eq!(bounds(&pc).unwrap(), BBox::new(0.0, 0.0, 2.0, 3.0).unwrap());
        let (one, _) = PointCloud::from_points(vec![Point::new(5.0, 5.0, 5.0)]);
        assert_eq!(
            bounds(&one).unwrap(),
            BBox::new(5.0, 5.0, 5.0, 5.0).unwrap()
        );
        assert!(matches!(
            bounds(&PointCloud::default()),
            Err(Error::EmptyInput)
        ));
    }
}
