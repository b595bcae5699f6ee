//! Event files: one `t,i` pair per line, sorted by `t` then `i`, with an
//! optional `# T=<int> N=<int>` first line declaring the raster shape.
//! Without the header the shape is the smallest one holding every event.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::SpikeRaster;

pub fn format_events(raster: &SpikeRaster) -> String {
    let mut out = format!("# T={} N={}\n", raster.t_steps(), raster.n());
    for (t, i) in raster.events() {
        let _ = writeln!(out, "{t},{i}");
    }
    out
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let mut parts = rest.split_whitespace();
    let t = parts.next()?.strip_prefix("T=")?.parse().ok()?;
    let n = parts.next()?.strip_prefix("N=")?.parse().ok()?;
    parts.next().is_none().then_some((t, n))
}

/// Parses event-file text. `path` is only used in error messages.
pub fn parse_events(text: &str, path: &Path) -> Result<SpikeRaster> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut shape = None;
    let mut events: Vec<(usize, usize, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if k == 0 {
                shape = Some(
                    parse_header(line)
                        .ok_or_else(|| parse_err(line_no, format!("malformed header {line:?}")))?,
                );
                continue;
            }
            return Err(parse_err(line_no, "header allowed only on the first line".into()));
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, format!("expected `t,i`, got {line:?}")))?;
        let t: usize = a
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid time {a:?}")))?;
        let i: usize = b
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid neuron index {b:?}")))?;
        if let Some(&(pt, pi, _)) = events.last() {
            if (t, i) <= (pt, pi) {
                return Err(parse_err(
                    line_no,
                    format!("event ({t},{i}) is not after ({pt},{pi}); events must be sorted and unique"),
                ));
            }
        }
        events.push((t, i, line_no));
    }
    let (t_steps, n) = match shape {
        Some(s) => s,
        None => (
            events.iter().map(|e| e.0 + 1).max().unwrap_or(0),
            events.iter().map(|e| e.1 + 1).max().unwrap_or(0),
        ),
    };
    let mut raster = SpikeRaster::zeros(t_steps, n);
    for &(t, i, line) in &events {
        if t >= t_steps || i >= n {
            return Err(Error::Range {
                path: path.to_path_buf(),
                line,
                t,
                i,
                t_steps,
                n,
            });
        }
        raster.set(t, i, true);
    }
    Ok(raster)
}

pub fn save_events(raster: &SpikeRaster, path: &Path) -> Result<()> {
    std::fs::write(path, format_events(raster)).map_err(|e| Error::io(path, e))
}

pub fn load_events(path: &Path) -> Result<SpikeRaster> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_events(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("e.txt")
    }

    #[test]
    fn format_by_definition() {
        let r = SpikeRaster::from_events(4, 3, &[(3, 0), (0, 2)]).unwrap();
        assert_eq!(format_events(&r), "# T=4 N=3\n0,2\n3,0\n");
        assert_eq!(format_events(&SpikeRaster::zeros(5, 2)), "# T=5 N=2\n");
    }

    #[test]
    fn headerless_shape_is_inferred() {
        let r = parse_events("0,1\n2,0\n", p()).unwrap();
        assert_eq!((r.t_steps(), r.n()), (3, 2));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_events("# T=4 N=2\n0,1\nx,1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_events("# T=4 N=2\n2,1\n1,0\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_events("# T=4 N=2\n1,1\n1,1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_events("# T=4 N=2\n0,0\n4,1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Range { line: 3, t: 4, .. }));
        let e = parse_events("# T=4 N=2\n0,5\n", p()).unwrap_err();
        assert!(e.to_string().contains("e.txt:2"));
        assert!(parse_events("# T=4\n", p()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(t in 0usize..20, n in 0usize..8, bits in proptest::collection::vec(any::<bool>(), 160)) {
            let mut r = SpikeRaster::zeros(t, n);
            for tt in 0..t {
                for i in 0..n {
                    r.set(tt, i, bits[tt * 8 + i]);
                }
            }
            let text = format_events(&r);
            let back = parse_events(&text, p()).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(format_events(&back), text);
        }
    }
}
