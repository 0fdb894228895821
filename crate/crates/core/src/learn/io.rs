//! TNTM model files and loss-history CSV.
//!
//! TNTM layout (little endian): magic `TNTM`, u16 version, u8 model kind
//! (0 = patch regressor, 1 = map encoder), the network descriptor
//! (u8 activation, u32 input, u32 hidden count, u32 per hidden layer, u32
//! output), kind-specific normalization fields, then u64 parameter count and
//! the parameters as f64.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::mlp::{Activation, Arch};
use super::regressor::{LossRecord, Regressor};
use crate::codec::{Reader, Writer};
use crate::error::{Result, TntError};

pub const TNTM_MAGIC: &[u8; 4] = b"TNTM";
pub const TNTM_VERSION: u16 = 1;
pub(crate) const KIND_REGRESSOR: u8 = 0;
pub(crate) const KIND_ENCODER: u8 = 1;

pub(crate) fn write_header(w: &mut Writer, kind: u8, arch: &Arch) {
    w.bytes(TNTM_MAGIC).u16(TNTM_VERSION).u8(kind);
    w.u8(arch.activation.code()).u32(arch.input as u32).u32(arch.hidden.len() as u32);
    for &h in &arch.hidden {
        w.u32(h as u32);
    }
    w.u32(arch.output as u32);
}

pub(crate) fn read_header(r: &mut Reader, kind: u8) -> Result<Arch> {
    r.magic(TNTM_MAGIC)?;
    r.version(TNTM_VERSION)?;
    let got = r.u8("model kind")?;
    if got != kind {
        return Err(TntError::format(format!("model kind {got}, expected {kind}")));
    }
    let act = r.u8("activation")?;
    let activation = Activation::from_code(act).ok_or_else(|| TntError::format(format!("bad activation code {act}")))?;
    let input = r.u32("input width")? as usize;
    let n_hidden = r.u32("hidden count")? as usize;
    if n_hidden > 64 {
        return Err(TntError::format("implausible hidden layer count"));
    }
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden.push(r.u32("hidden width")? as usize);
    }
    let output = r.u32("output width")? as usize;
    let arch = Arch {
        input,
        hidden,
        output,
        activation,
    };
    arch.validate().map_err(|_| TntError::format("zero-width layer in model file"))?;
    Ok(arch)
}

pub(crate) fn write_params(w: &mut Writer, params: &[f64]) {
    w.u64(params.len() as u64).f64s(params);
}

pub(crate) fn read_params(r: &mut Reader, arch: &Arch) -> Result<Vec<f64>> {
    let n = r.u64("parameter count")? as usize;
    if n != arch.param_count() {
        return Err(TntError::format(format!(
            "model has {n} parameters, architecture needs {}",
            arch.param_count()
        )));
    }
    r.f64s(n, "parameters")
}

pub fn encode_regressor(reg: &Regressor) -> Vec<u8> {
    let mut w = Writer::new();
    write_header(&mut w, KIND_REGRESSOR, reg.arch());
    w.u32(reg.k() as u32)
        .f64(reg.height_scale())
        .f64(reg.sigma_floor())
        .f64s(reg.target_mean())
        .f64s(reg.target_scale());
    write_params(&mut w, reg.params());
    w.finish()
}

pub fn decode_regressor(data: &[u8]) -> Result<Regressor> {
    let mut r = Reader::new(data);
    let arch = read_header(&mut r, KIND_REGRESSOR)?;
    let k = r.u32("target count")? as usize;
    if k == 0 || k > 64 {
        return Err(TntError::format(format!("bad target count {k}")));
    }
    let height_scale = r.f64("height scale")?;
    let sigma_floor = r.f64("sigma floor")?;
    let mean = r.f64s(k, "target mean")?;
    let scale = r.f64s(k, "target scale")?;
    let params = read_params(&mut r, &arch)?;
    r.finish()?;
    Regressor::from_parts(arch, k, params, height_scale, sigma_floor, mean, scale)
}

pub fn write_regressor(reg: &Regressor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_regressor(reg))?;
    Ok(())
}

pub fn read_regressor(path: impl AsRef<Path>) -> Result<Regressor> {
    decode_regressor(&fs::read(path)?)
}

pub fn loss_csv(history: &[LossRecord]) -> String {
    let mut s = String::from("epoch,train_nll,val_nll\n");
    for h in history {
        let _ = writeln!(s, "{},{},{}", h.epoch, h.train_nll, h.val_nll);
    }
    s
}

pub fn write_loss_csv(history: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, loss_csv(history))?;
    Ok(())
}
