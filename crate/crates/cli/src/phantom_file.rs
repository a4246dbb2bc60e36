//! Phantom sources: built-in names or ASCII files with one ellipse per line,
//! `cx cy a b rot_deg density`, and `#` comments.

use std::fs;
use std::path::Path;

use radon_core::phantoms::Ellipse;
use radon_core::{EllipsePhantom, PhantomError};

use crate::error::CliError;

/// Resolves `ellipse-suite`, `disk:<r>:<density>`, or a phantom file path.
pub fn load(source: &str) -> Result<EllipsePhantom, CliError> {
    if let Some(phantom) = builtin(source)? {
        return Ok(phantom);
    }
    let text = fs::read_to_string(Path::new(source)).map_err(|e| CliError::io(source, e))?;
    parse(&text, source)
}

fn builtin(source: &str) -> Result<Option<EllipsePhantom>, CliError> {
    if source == "ellipse-suite" {
        return Ok(Some(EllipsePhantom::ellipse_suite()));
    }
    let Some(rest) = source.strip_prefix("disk:") else {
        return Ok(None);
    };
    let usage = || CliError::Usage(format!("bad built-in phantom '{source}' (expected disk:<r>:<density>)"));
    let (r, d) = rest.split_once(':').ok_or_else(usage)?;
    let r: f64 = r.parse().map_err(|_| usage())?;
    let d: f64 = d.parse().map_err(|_| usage())?;
    EllipsePhantom::disk(r, d)
        .map(Some)
        .map_err(|e| CliError::Usage(format!("{source}: {e}")))
}

/// Parses phantom file text; `origin` names the file in error messages.
pub fn parse(text: &str, origin: &str) -> Result<EllipsePhantom, CliError> {
    let mut components = Vec::new();
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| CliError::Parse {
            origin: origin.to_string(),
            line,
            message,
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(format!(
                "expected 6 fields 'cx cy a b rot_deg density', found {}",
                fields.len()
            )));
        }
        let mut v = [0.0; 6];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| err(format!("'{field}' is not a number")))?;
        }
        components.push(Ellipse {
            center: (v[0], v[1]),
            semi_axes: (v[2], v[3]),
            rotation: v[4].to_radians(),
            density: v[5],
        });
        lines.push(line);
    }
    EllipsePhantom::new(components).map_err(|e| {
        let line = match e {
            PhantomError::BadAxes { index }
            | PhantomError::NonFinite { index }
            | PhantomError::OutsideUnitBall { index, .. } => lines[index],
            _ => text.lines().count().max(1),
        };
        CliError::Parse {
            origin: origin.to_string(),
            line,
            message: e.to_string(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# suite\n\n0 0 0.5 0.25 90 1.0  # big\n0.1 0.1 0.1 0.1 0 -0.5\n";
        let p = parse(text, "t").unwrap();
        assert_eq!(p.components().len(), 2);
        assert!((p.components()[0].rotation - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.components()[1].density, -0.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let msg = |t: &str| parse(t, "f.txt").unwrap_err().to_string();
        assert_eq!(msg("# c\n0 0 1\n"), "f.txt:2: expected 6 fields 'cx cy a b rot_deg density', found 3");
        assert!(msg("0 0 0.5 0.5 0 x\n").starts_with("f.txt:1: 'x' is not a number"));
        assert!(msg("0 0 0.1 0.1 0 1\n\n0.9 0 0.5 0.5 0 1\n").starts_with("f.txt:3:"));
        assert!(msg("0 0 -0.1 0.1 0 1\n").starts_with("f.txt:1:"));
        assert!(msg("# nothing\n").contains("f.txt:1:"));
    }

    #[test]
    fn builtins() {
        assert_eq!(load("ellipse-suite").unwrap(), EllipsePhantom::ellipse_suite());
        assert_eq!(load("disk:0.5:2").unwrap(), EllipsePhantom::disk(0.5, 2.0).unwrap());
        assert!(matches!(load("disk:0.5"), Err(CliError::Usage(_))));
        assert!(matches!(load("disk:1.5:1"), Err(CliError::Usage(_))));
        assert!(matches!(load("/no/such/phantom.txt"), Err(CliError::Io { .. })));
    }
}
