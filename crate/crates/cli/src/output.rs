use std::io::{self, Write};
use std::process::ExitCode;

use crvolume_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

/// Writes every float with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser).expect("serializable payload");
    String::from_utf8(buf).expect("utf-8 JSON")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Failed = 1,
    InputError = 2,
    Degenerate = 3,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
            Status::InputError => "input_error",
            Status::Degenerate => "degenerate",
        }
    }

    pub fn passed(pass: bool) -> Self {
        if pass {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

/// A finished command: status plus the JSON body (without the status field).
pub struct Outcome {
    pub status: Status,
    pub body: Value,
}

impl Outcome {
    pub fn new(status: Status, body: Value) -> Self {
        Self { status, body }
    }

    pub fn ok(body: Value) -> Self {
        Self::new(Status::Ok, body)
    }

    pub fn input_error(message: impl Into<String>) -> Self {
        Self::new(Status::InputError, json!({ "error": message.into() }))
    }

    pub fn emit(self) -> ExitCode {
        let mut body = self.body;
        if let Value::Object(map) = &mut body {
            map.insert("status".into(), Value::String(self.status.name().into()));
        }
        if let Some(msg) = body.get("error").and_then(Value::as_str) {
            eprintln!("crvolume: {msg}");
        }
        println!("{}", to_json_string(&body));
        ExitCode::from(self.status as u8)
    }
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) | Error::Structural(_) => Status::InputError,
            Error::Degenerate(_) | Error::MoveRefused(_) => Status::Degenerate,
        };
        Outcome::new(status, json!({ "error": e.to_string() }))
    }
}
