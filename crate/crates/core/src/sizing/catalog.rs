use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SizingError;

/// Bundled benchmark catalog. Ratings are synthetic; names encode power and
/// rated speed (motors) or frame and ratio (gearboxes).
pub const BUNDLED_CATALOG_JSON: &str = include_str!("../../data/catalog.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Motor {
    pub name: String,
    #[serde(rename = "rated_torque_Nm")]
    pub rated_torque: f64,
    #[serde(rename = "peak_torque_Nm")]
    pub peak_torque: f64,
    #[serde(rename = "rated_speed_rpm")]
    pub rated_speed: f64,
    #[serde(rename = "max_speed_rpm")]
    pub max_speed: f64,
    #[serde(rename = "rotor_inertia_kgm2")]
    pub rotor_inertia: f64,
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    #[serde(rename = "rated_power_W")]
    pub rated_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gearbox {
    pub name: String,
    pub ratio: f64,
    #[serde(rename = "rated_out_Nm")]
    pub rated_output_torque: f64,
    #[serde(rename = "peak_out_Nm")]
    pub peak_output_torque: f64,
    pub efficiency: f64,
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    #[serde(rename = "max_input_rpm")]
    pub max_input_speed: f64,
}

impl Motor {
    fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (field, v) in [
            ("rated_torque_Nm", self.rated_torque),
            ("peak_torque_Nm", self.peak_torque),
            ("rated_speed_rpm", self.rated_speed),
            ("max_speed_rpm", self.max_speed),
            ("rotor_inertia_kgm2", self.rotor_inertia),
            ("rated_power_W", self.rated_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push((field, format!("must be positive, got {v}")));
            }
        }
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            out.push(("mass_kg", format!("must be non-negative, got {}", self.mass)));
        }
        if self.peak_torque < self.rated_torque {
            out.push(("peak_torque_Nm", "below rated torque".into()));
        }
        if self.max_speed < self.rated_speed {
            out.push(("max_speed_rpm", "below rated speed".into()));
        }
        out
    }
}

impl Gearbox {
    fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            out.push(("ratio", format!("must exceed 1, got {}", self.ratio)));
        }
        for (field, v) in [
            ("rated_out_Nm", self.rated_output_torque),
            ("peak_out_Nm", self.peak_output_torque),
            ("max_input_rpm", self.max_input_speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push((field, format!("must be positive, got {v}")));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            out.push(("efficiency", format!("must lie in (0, 1], got {}", self.efficiency)));
        }
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            out.push(("mass_kg", format!("must be non-negative, got {}", self.mass)));
        }
        if self.peak_output_torque < self.rated_output_torque {
            out.push(("peak_out_Nm", "below rated output torque".into()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorCatalog {
    pub motors: Vec<Motor>,
    pub gearboxes: Vec<Gearbox>,
}

impl ActuatorCatalog {
    pub fn motor(&self, name: &str) -> Option<&Motor> {
        self.motors.iter().find(|m| m.name == name)
    }

    pub fn gearbox(&self, name: &str) -> Option<&Gearbox> {
        self.gearboxes.iter().find(|g| g.name == name)
    }

    pub fn validate(&self) -> Result<(), SizingError> {
        let err = |location: String, message: String| Err(SizingError::Catalog { location, message });
        if self.motors.is_empty() {
            return err("motors".into(), "at least one motor is required".into());
        }
        if self.gearboxes.is_empty() {
            return err("gearboxes".into(), "at least one gearbox is required".into());
        }
        let mut seen = HashSet::new();
        for (i, m) in self.motors.iter().enumerate() {
            if m.name.trim().is_empty() {
                return err(format!("motors[{i}].name"), "empty name".into());
            }
            if !seen.insert(m.name.as_str()) {
                return err(format!("motors[{i}].name"), format!("duplicate name {}", m.name));
            }
            if let Some((field, msg)) = m.violations().into_iter().next() {
                return err(format!("motors[{i}].{field}"), msg);
            }
        }
        let mut seen = HashSet::new();
        for (i, g) in self.gearboxes.iter().enumerate() {
            if g.name.trim().is_empty() {
                return err(format!("gearboxes[{i}].name"), "empty name".into());
            }
            if !seen.insert(g.name.as_str()) {
                return err(format!("gearboxes[{i}].name"), format!("duplicate name {}", g.name));
            }
            if let Some((field, msg)) = g.violations().into_iter().next() {
                return err(format!("gearboxes[{i}].{field}"), msg);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("catalog serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogFormat {
    Json,
    Csv,
}

/// Parse and validate a JSON catalog document.
pub fn load_catalog(document: &str) -> Result<ActuatorCatalog, SizingError> {
    let catalog: ActuatorCatalog = serde_json::from_str(document).map_err(|e| SizingError::Catalog {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    catalog.validate()?;
    Ok(catalog)
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str, table: &str) -> Result<Vec<T>, SizingError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                let field = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.field().map(|f| format!(" field {}", f + 1)),
                    _ => None,
                };
                SizingError::Catalog {
                    location: format!("{table} line {line}{}", field.unwrap_or_default()),
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

/// Parse and validate a catalog given as one motors table and one gearboxes table.
pub fn load_catalog_csv(motors: &str, gearboxes: &str) -> Result<ActuatorCatalog, SizingError> {
    let catalog = ActuatorCatalog { motors: parse_csv(motors, "motors")?, gearboxes: parse_csv(gearboxes, "gearboxes")? };
    catalog.validate()?;
    Ok(catalog)
}

pub fn motors_csv_header() -> [&'static str; 8] {
    [
        "name",
        "rated_torque_Nm",
        "peak_torque_Nm",
        "rated_speed_rpm",
        "max_speed_rpm",
        "rotor_inertia_kgm2",
        "mass_kg",
        "rated_power_W",
    ]
}

pub fn gearboxes_csv_header() -> [&'static str; 7] {
    ["name", "ratio", "rated_out_Nm", "peak_out_Nm", "efficiency", "mass_kg", "max_input_rpm"]
}

/// Write both tables as CSV.
pub fn write_catalog_csv<W: Write, V: Write>(catalog: &ActuatorCatalog, motors: W, gearboxes: V) -> Result<(), SizingError> {
    let wrap = |e: csv::Error| SizingError::Catalog { location: "csv output".into(), message: e.to_string() };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(motors);
    for m in &catalog.motors {
        w.serialize(m).map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(gearboxes);
    for g in &catalog.gearboxes {
        w.serialize(g).map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))?;
    Ok(())
}

pub fn bundled_catalog() -> ActuatorCatalog {
    load_catalog(BUNDLED_CATALOG_JSON).expect("bundled catalog is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_round_trips() {
        let c = bundled_catalog();
        assert_eq!(c.motors.len(), 8);
        assert_eq!(c.gearboxes.len(), 10);
        assert_eq!(c.to_json(), BUNDLED_CATALOG_JSON);
    }

    #[test]
    fn csv_round_trip() {
        let c = bundled_catalog();
        let (mut m, mut g) = (Vec::new(), Vec::new());
        write_catalog_csv(&c, &mut m, &mut g).unwrap();
        let (m, g) = (String::from_utf8(m).unwrap(), String::from_utf8(g).unwrap());
        assert!(m.starts_with(&motors_csv_header().join(",")));
        assert!(g.starts_with(&gearboxes_csv_header().join(",")));
        assert_eq!(load_catalog_csv(&m, &g).unwrap(), c);
    }

    #[test]
    fn empty_motor_list_rejected() {
        let err = load_catalog(r#"{"motors": [], "gearboxes": []}"#).unwrap_err();
        assert!(matches!(err, SizingError::Catalog { ref location, .. } if location == "motors"), "{err}");
    }

    #[test]
    fn bad_efficiency_names_the_field() {
        let mut c = bundled_catalog();
        c.gearboxes[3].efficiency = 1.2;
        let err = load_catalog(&c.to_json()).unwrap_err();
        assert!(matches!(err, SizingError::Catalog { ref location, .. } if location == "gearboxes[3].efficiency"), "{err}");
    }

    #[test]
    fn duplicates_rejected() {
        let mut c = bundled_catalog();
        c.motors[1].name = c.motors[0].name.clone();
        assert!(load_catalog(&c.to_json()).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn csv_schema_errors_carry_location() {
        let motors = "name,rated_torque_Nm,peak_torque_Nm,rated_speed_rpm,max_speed_rpm,rotor_inertia_kgm2,mass_kg,rated_power_W\n\
                      a,1,3,3000,5000,0.0001,1,300\n\
                      b,1,abc,3000,5000,0.0001,1,300\n";
        let gear = "name,ratio,rated_out_Nm,peak_out_Nm,efficiency,mass_kg,max_input_rpm\ng,50,100,200,0.9,1,4000\n";
        let err = load_catalog_csv(motors, gear).unwrap_err();
        match err {
            SizingError::Catalog { location, .. } => assert_eq!(location, "motors line 3 field 3"),
            other => panic!("{other}"),
        }
        assert!(load_catalog_csv(&motors.lines().take(2).collect::<Vec<_>>().join("\n"), gear).is_ok());
    }
}
