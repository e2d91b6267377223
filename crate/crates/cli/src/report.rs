use std::path::Path;

use anyhow::Result;
use pdfwm::metrics::DistortionReport;
use serde_json::{json, Map, Value};

use crate::input::{write_atomic, Target};

#[derive(Debug, Clone, PartialEq)]
enum Field {
    Number(f64),
    Text(String),
}

impl Field {
    fn text(&self) -> String {
        match self {
            Field::Number(v) if v.is_infinite() => "inf".into(),
            Field::Number(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Number(v) if v.is_finite() => json!(v),
            other => json!(other.text()),
        }
    }
}

/// Per-image results of one command, in processing order.
#[derive(Debug)]
pub struct ImageReport {
    label: String,
    object: Option<(u32, u16)>,
    fields: Vec<(String, Field)>,
}

impl ImageReport {
    pub fn new(target: &Target) -> Self {
        ImageReport {
            label: target.label.clone(),
            object: target.image_ref.as_ref().map(|r| r.object_id),
            fields: Vec::new(),
        }
    }

    pub fn number(&mut self, key: &str, value: f64) {
        self.fields.push((key.into(), Field::Number(value)));
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) {
        self.fields.push((key.into(), Field::Text(value.into())));
    }

    /// Adds every metric of `report` under `prefix_`.
    pub fn distortion(&mut self, prefix: &str, report: &DistortionReport) {
        if let Some(ham) = report.ham {
            self.number(&format!("{prefix}_ham"), ham);
        }
        self.number(&format!("{prefix}_rmse"), report.rmse);
        self.number(&format!("{prefix}_psnr"), report.psnr);
        self.number(&format!("{prefix}_relent"), report.relent);
    }
}

#[derive(Debug)]
pub struct Report {
    command: &'static str,
    images: Vec<ImageReport>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            images: Vec::new(),
        }
    }

    pub fn push(&mut self, image: ImageReport) {
        self.images.push(image);
    }

    pub fn to_kv_text(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for img in &self.images {
            out.push_str(&format!("\n[image {}]\n", img.label));
            if let Some((num, gen)) = img.object {
                out.push_str(&format!("object={num} {gen}\n"));
            }
            for (key, value) in &img.fields {
                out.push_str(&format!("{key}={}\n", value.text()));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let images: Vec<Value> = self
            .images
            .iter()
            .map(|img| {
                let mut map = Map::new();
                map.insert("image".into(), json!(img.label));
                if let Some((num, gen)) = img.object {
                    map.insert("object".into(), json!([num, gen]));
                }
                for (key, value) in &img.fields {
                    map.insert(key.clone(), value.json());
                }
                Value::Object(map)
            })
            .collect();
        let doc = json!({ "command": self.command, "images": images });
        serde_json::to_string_pretty(&doc).expect("report values are always serializable") + "\n"
    }

    /// Writes to `path` (JSON for a `.json` name) or prints key=value lines.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p)
                if p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
            {
                write_atomic(p, self.to_json().as_bytes())
            }
            Some(p) => write_atomic(p, self.to_kv_text().as_bytes()),
            None => {
                print!("{}", self.to_kv_text());
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdfwm::RasterImage;

    fn target() -> Target {
        Target {
            label: "1:0".into(),
            page: 1,
            index: 0,
            image_ref: None,
            raster: RasterImage::from_fn(1, 1, 1, |_, _, _| 0).unwrap(),
        }
    }

    #[test]
    fn both_formats_carry_the_same_fields() {
        let mut img = ImageReport::new(&target());
        img.number("psnr", f64::INFINITY);
        img.number("ham", 0.25);
        img.text("channels", "all");
        let mut report = Report::new("embed");
        report.push(img);
        assert_eq!(
            report.to_kv_text(),
            "command=embed\n\n[image 1:0]\npsnr=inf\nham=0.25\nchannels=all\n"
        );
        let parsed: Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed["images"][0]["psnr"], "inf");
        assert_eq!(parsed["images"][0]["ham"], 0.25);
        assert_eq!(parsed["command"], "embed");
    }
}
