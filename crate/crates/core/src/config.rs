//! Flat `key = value` run configuration.
//!
//! The format is UTF-8 text: one `key = value` pair per line, `#` starts a
//! comment, blank lines ignored. Keys are the dotted field paths emitted in
//! run manifests; unknown keys are errors. Manifests are themselves valid
//! config files: the `rng.*`, `artifact.*`, and `manifest.*` namespaces are
//! accepted and ignored on load so a recorded manifest reproduces its run.

use std::path::PathBuf;

use thiserror::Error;

use crate::experiments::{ExperimentKind, ExperimentParams, StimSpec};
use crate::simulation::HabitabilitySpec;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`, got: {text}")]
    BadLine { line: usize, text: String },
    #[error("unknown config key: {0}")]
    UnknownKey(String),
    #[error("key {key}: bad value {value:?}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("key {key} does not apply to the {kind} experiment")]
    Inapplicable { key: String, kind: String },
    #[error("config names experiment `{file}` but `{requested}` was requested")]
    ExperimentMismatch { file: String, requested: String },
}

/// Parse the flat text into ordered pairs. Duplicate keys are allowed; the
/// last occurrence wins at application time.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(ParseError::BadLine {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(ParseError::BadLine {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Parse a single `key=value` override argument.
pub fn parse_override(arg: &str) -> Result<(String, String), ParseError> {
    let Some(eq) = arg.find('=') else {
        return Err(ParseError::BadLine {
            line: 0,
            text: arg.to_string(),
        });
    };
    let key = arg[..eq].trim();
    let value = arg[eq + 1..].trim();
    if key.is_empty() {
        return Err(ParseError::BadLine {
            line: 0,
            text: arg.to_string(),
        });
    }
    Ok((key.to_string(), value.to_string()))
}

fn bad<T>(key: &str, value: &str, reason: &str) -> Result<T, ParseError> {
    Err(ParseError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    })
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParseError> {
    value
        .parse::<T>()
        .or_else(|_| bad(key, value, "expected a number"))
}

fn parse_rect(key: &str, value: &str) -> Result<(u32, u32, u32, u32), ParseError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return bad(key, value, "expected x0,y0,x1,y1");
    }
    let mut nums = [0u32; 4];
    for (n, p) in nums.iter_mut().zip(&parts) {
        *n = parse_num(key, p)?;
    }
    if nums[0] > nums[2] || nums[1] > nums[3] {
        return bad(key, value, "rectangle must satisfy x0 <= x1 and y0 <= y1");
    }
    Ok((nums[0], nums[1], nums[2], nums[3]))
}

fn parse_steps(key: &str, value: &str) -> Result<Vec<u64>, ParseError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|p| parse_num(key, p.trim()))
        .collect()
}

fn inapplicable<T>(key: &str, kind: ExperimentKind) -> Result<T, ParseError> {
    Err(ParseError::Inapplicable {
        key: key.to_string(),
        kind: kind.name().to_string(),
    })
}

/// Apply parsed pairs onto canned defaults, in order. `stimulus.kind` is
/// handled in a pre-pass for custom runs so the remaining stimulus keys have
/// a shape to land on.
pub fn apply_pairs(
    params: &mut ExperimentParams,
    pairs: &[(String, String)],
) -> Result<(), ParseError> {
    // Pre-pass: experiment identity and (custom only) the stimulus shape.
    for (key, value) in pairs {
        if key == "experiment" && value != params.kind.name() {
            return Err(ParseError::ExperimentMismatch {
                file: value.clone(),
                requested: params.kind.name().to_string(),
            });
        }
        if key == "stimulus.kind" {
            let canonical = params.stim.kind_matches(value);
            match (params.kind, canonical) {
                (_, true) => {}
                (ExperimentKind::Custom, false) => {
                    params.stim = match value.as_str() {
                        "uniform-attractant" => StimSpec::Uniform {
                            rect: None,
                            magnitude: crate::stimulus::UNIFORM_MAGNITUDE,
                        },
                        "adverse" => StimSpec::Adverse { rect: None },
                        "image-attractant" => StimSpec::ImageFile { path: PathBuf::new() },
                        _ => return bad(key, value, "expected uniform-attractant, adverse, or image-attractant"),
                    };
                }
                (_, false) => {
                    return bad(
                        key,
                        value,
                        &format!("the {} experiment's stimulus kind is fixed", params.kind.name()),
                    )
                }
            }
        }
    }

    for (key, value) in pairs {
        apply_one(params, key, value)?;
    }
    Ok(())
}

fn apply_one(params: &mut ExperimentParams, key: &str, value: &str) -> Result<(), ParseError> {
    // Reserved manifest namespaces: validated as known, ignored on load.
    if key.starts_with("rng.") || key.starts_with("artifact.") || key.starts_with("manifest.") {
        return Ok(());
    }
    match key {
        "experiment" | "stimulus.kind" => {} // handled in the pre-pass
        "seed" => params.seed = parse_num(key, value)?,
        "dims.width" => params.width = parse_num(key, value)?,
        "dims.height" => params.height = parse_num(key, value)?,
        "habitability" => match value {
            "full" => params.habitability = HabitabilitySpec::Full,
            "tube" => {
                let wall_rows = match params.habitability {
                    HabitabilitySpec::Tube { wall_rows } => wall_rows,
                    HabitabilitySpec::Full => 1,
                };
                params.habitability = HabitabilitySpec::Tube { wall_rows };
            }
            _ => return bad(key, value, "expected full or tube"),
        },
        "habitability.wall_rows" => {
            let rows = parse_num(key, value)?;
            params.habitability = HabitabilitySpec::Tube { wall_rows: rows };
        }
        "particle_count" => params.particle_count = parse_num(key, value)?,
        "total_steps" => params.total_steps = parse_num(key, value)?,
        "sample_interval" => params.sample_interval = parse_num(key, value)?,
        "agent_params.sensor_angle" => params.agent_params.sensor_angle = parse_num(key, value)?,
        "agent_params.rotation_angle" => {
            params.agent_params.rotation_angle = parse_num(key, value)?
        }
        "agent_params.sensor_offset_min" => {
            params.agent_params.sensor_offset_min = parse_num(key, value)?
        }
        "agent_params.sensor_offset_max" => {
            params.agent_params.sensor_offset_max = parse_num(key, value)?
        }
        "agent_params.step_size" => params.agent_params.step_size = parse_num(key, value)?,
        "agent_params.deposit" => params.agent_params.deposit = parse_num(key, value)?,
        "stimulus.start_step" => params.stimulus_start = parse_num(key, value)?,
        "stimulus.end_step" => params.stimulus_end = Some(parse_num(key, value)?),
        "stimulus.magnitude" => match &mut params.stim {
            StimSpec::Uniform { magnitude, .. } => *magnitude = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "stimulus.rect" => match &mut params.stim {
            StimSpec::Uniform { rect, .. } | StimSpec::Adverse { rect } => {
                *rect = Some(parse_rect(key, value)?)
            }
            _ => return inapplicable(key, params.kind),
        },
        "stimulus.image" => match &mut params.stim {
            StimSpec::ImageFile { path } => *path = PathBuf::from(value),
            _ => return inapplicable(key, params.kind),
        },
        "chevreul.n_bars" => match &mut params.stim {
            StimSpec::Chevreul { n_bars, .. } => *n_bars = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "chevreul.border_width" => match &mut params.stim {
            StimSpec::Chevreul { border_width, .. } => *border_width = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "chevreul.min_brightness" => match &mut params.stim {
            StimSpec::Chevreul { min_brightness, .. } => *min_brightness = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "chevreul.max_brightness" => match &mut params.stim {
            StimSpec::Chevreul { max_brightness, .. } => *max_brightness = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "sbc.left_brightness" => match &mut params.stim {
            StimSpec::Sbc { left_brightness, .. } => *left_brightness = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "sbc.right_brightness" => match &mut params.stim {
            StimSpec::Sbc { right_brightness, .. } => *right_brightness = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "sbc.band_brightness" => match &mut params.stim {
            StimSpec::Sbc { band_brightness, .. } => *band_brightness = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "sbc.band_width" => match &mut params.stim {
            StimSpec::Sbc { band_width, .. } => *band_width = parse_num(key, value)?,
            _ => return inapplicable(key, params.kind),
        },
        "snapshots" => params.snapshot_steps = Some(parse_steps(key, value)?),
        "profiles" => params.profile_steps = Some(parse_steps(key, value)?),
        "contrast_truncate" => params.contrast_truncate = Some(parse_num(key, value)?),
        _ => return Err(ParseError::UnknownKey(key.to_string())),
    }
    Ok(())
}
