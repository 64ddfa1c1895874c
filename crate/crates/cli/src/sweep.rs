//! Parameter sweeps: `key=a:b:step` ranges or `key=v1,v2,...` lists.
//! Several axes combine as a cartesian product, first axis slowest.

use anyhow::{bail, Context, Result};
use ris_mac::config::SystemConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, rhs) = spec
            .split_once('=')
            .with_context(|| format!("sweep {spec:?}: expected key=a:b:step or key=v1,v2"))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            bail!("sweep {spec:?}: empty key");
        }
        let rhs = rhs.trim();
        let values = if rhs.is_empty() {
            Vec::new()
        } else if rhs.contains(':') {
            range(rhs).with_context(|| format!("sweep {spec:?}"))?
        } else {
            rhs.split(',').map(|v| v.trim().to_string()).collect()
        };
        Ok(Self { key, values })
    }
}

fn range(spec: &str) -> Result<Vec<String>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [a, b, step] = parts[..] else {
        bail!("range must be a:b:step");
    };
    let num = |s: &str| s.parse::<f64>().with_context(|| format!("{s:?} is not a number"));
    let (lo, hi, step_v) = (num(a)?, num(b)?, num(step)?);
    if !(step_v > 0.0) {
        bail!("step must be positive");
    }
    let integral = [a, b, step].iter().all(|s| s.parse::<i64>().is_ok());
    let count = if hi < lo {
        0
    } else {
        ((hi - lo) / step_v + 1e-9).floor() as usize + 1
    };
    Ok((0..count)
        .map(|i| {
            let v = lo + i as f64 * step_v;
            if integral {
                format!("{}", v.round() as i64)
            } else {
                format!("{}", (v * 1e12).round() / 1e12)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub axes: Vec<Axis>,
}

/// One sweep point: the (key, value) pairs applied to the base config.
pub type Point = Vec<(String, String)>;

impl Sweep {
    pub fn parse(specs: &[String]) -> Result<Self> {
        Ok(Self {
            axes: specs.iter().map(|s| Axis::parse(s)).collect::<Result<_>>()?,
        })
    }

    pub fn keys(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.key.clone()).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((axis.key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Sets one parameter. The negotiation time also moves the frame length
/// so the transmission phase keeps its duration; the group count and the
/// sub-channel count move together.
pub fn apply(config: &mut SystemConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "t_h" | "negotiation_time" => {
            config.set(key, value)?;
            config.frame_s = config.negotiation_s + config.transmission_s;
        }
        "L" | "ris_groups" | "C" | "subchannels" => {
            config.set(key, value)?;
            let n = if matches!(key, "L" | "ris_groups") {
                config.groups
            } else {
                config.subchannels
            };
            config.groups = n;
            config.subchannels = n;
            config.group_shape = None;
        }
        _ => config.set(key, value)?,
    }
    Ok(())
}

pub fn configure(base: &SystemConfig, point: &Point) -> Result<SystemConfig> {
    let mut c = base.clone();
    for (k, v) in point {
        apply(&mut c, k, v).with_context(|| format!("{k}={v}"))?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_range() {
        let a = Axis::parse("K=10:100:10").unwrap();
        assert_eq!(a.values.len(), 10);
        assert_eq!(a.values[0], "10");
        assert_eq!(a.values[9], "100");
    }

    #[test]
    fn decimal_range_hits_endpoint() {
        let a = Axis::parse("t_h=0.02:0.05:0.01").unwrap();
        assert_eq!(a.values, ["0.02", "0.03", "0.04", "0.05"]);
    }

    #[test]
    fn list_and_empty() {
        assert_eq!(Axis::parse("L=1,2,4").unwrap().values, ["1", "2", "4"]);
        assert!(Axis::parse("L=").unwrap().values.is_empty());
        assert!(Axis::parse("L").is_err());
        assert!(Axis::parse("K=1:5:0").is_err());
    }

    #[test]
    fn cartesian_product() {
        let s = Sweep::parse(&["K=1,2".into(), "L=1,2,4".into()]).unwrap();
        let p = s.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![("K".into(), "1".into()), ("L".into(), "2".into())]);
        assert_eq!(Sweep::default().points().len(), 1);
    }

    #[test]
    fn coupled_keys() {
        let base = SystemConfig::default();
        let c = configure(&base, &vec![("t_h".into(), "0.05".into())]).unwrap();
        assert!((c.frame_s - 0.23).abs() < 1e-12);
        let c = configure(&base, &vec![("L".into(), "4".into())]).unwrap();
        assert_eq!((c.groups, c.subchannels), (4, 4));
        assert!(c.validate().is_ok());
    }
}
