//! Versioned JSON model containers and the training manifest.
//!
//! Every model file carries a format tag, a version, and the SHA-256 of the
//! vocabulary it was trained with, so the scorer can refuse mismatched
//! model/manifest combinations. Weight matrices are stored row-major with
//! declared dimensions. Floats survive the round trip bit-exactly
//! (shortest-representation encoding), so reloaded models reproduce scores
//! bit for bit.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{IdfWeights, Scaler};
use crate::lstm::{LstmHyperparams, LstmPredictor};
use crate::ocsvm::OcsvmModel;
use crate::pca::PcaDensityModel;

pub const PCA_FORMAT: &str = "sentinel-pca";
pub const OCSVM_FORMAT: &str = "sentinel-ocsvm";
pub const LSTM_FORMAT: &str = "sentinel-lstm";
pub const MANIFEST_FORMAT: &str = "sentinel-manifest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad container: expected format {expected:?} v{expected_version}, found {found:?} v{found_version}")]
    BadContainer {
        expected: &'static str,
        expected_version: u32,
        found: String,
        found_version: u32,
    },
    #[error("corrupt model: {0}")]
    Corrupt(String),
}

/// Row-major dense matrix payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>, PersistError> {
        if self.data.len() != self.rows * self.cols {
            return Err(PersistError::Corrupt(format!(
                "matrix declared {}x{} but carries {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

fn check_container(expected: &'static str, format: &str, version: u32) -> Result<(), PersistError> {
    if format != expected || version != FORMAT_VERSION {
        return Err(PersistError::BadContainer {
            expected,
            expected_version: FORMAT_VERSION,
            found: format.to_string(),
            found_version: version,
        });
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PcaModelFile {
    format: String,
    version: u32,
    vocab_sha256: String,
    mean: Vec<f64>,
    components: MatrixRecord,
    eigenvalues: Vec<f64>,
    k: usize,
    sigma2: f64,
    scaler: Scaler,
}

pub fn save_pca<W: Write>(
    model: &PcaDensityModel,
    vocab_sha256: &str,
    mut w: W,
) -> Result<(), PersistError> {
    let file = PcaModelFile {
        format: PCA_FORMAT.to_string(),
        version: FORMAT_VERSION,
        vocab_sha256: vocab_sha256.to_string(),
        mean: model.mean().iter().copied().collect(),
        components: MatrixRecord::from_matrix(model.components()),
        eigenvalues: model.eigenvalues().to_vec(),
        k: model.k(),
        sigma2: model.sigma2(),
        scaler: model.scaler().clone(),
    };
    serde_json::to_writer(&mut w, &file)?;
    writeln!(w)?;
    Ok(())
}

pub fn load_pca<R: Read>(r: R) -> Result<(PcaDensityModel, String), PersistError> {
    let file: PcaModelFile = serde_json::from_reader(r)?;
    check_container(PCA_FORMAT, &file.format, file.version)?;
    let model = PcaDensityModel::from_parts(
        file.mean,
        file.components.to_matrix()?,
        file.eigenvalues,
        file.k,
        file.sigma2,
        file.scaler,
    )
    .map_err(|e| PersistError::Corrupt(e.to_string()))?;
    Ok((model, file.vocab_sha256))
}

#[derive(Debug, Serialize, Deserialize)]
struct OcsvmModelFile {
    format: String,
    version: u32,
    vocab_sha256: String,
    support_vectors: MatrixRecord,
    alphas: Vec<f64>,
    support_indices: Vec<usize>,
    rho: f64,
    gamma: f64,
    nu: f64,
    scaler: Scaler,
}

pub fn save_ocsvm<W: Write>(
    model: &OcsvmModel,
    vocab_sha256: &str,
    mut w: W,
) -> Result<(), PersistError> {
    let n_sv = model.support_vectors().len();
    let dim = model.support_vectors().first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(n_sv * dim);
    for sv in model.support_vectors() {
        data.extend_from_slice(sv);
    }
    let file = OcsvmModelFile {
        format: OCSVM_FORMAT.to_string(),
        version: FORMAT_VERSION,
        vocab_sha256: vocab_sha256.to_string(),
        support_vectors: MatrixRecord {
            rows: n_sv,
            cols: dim,
            data,
        },
        alphas: model.alphas().to_vec(),
        support_indices: model.support_indices().to_vec(),
        rho: model.rho(),
        gamma: model.gamma(),
        nu: model.nu(),
        scaler: model.scaler().clone(),
    };
    serde_json::to_writer(&mut w, &file)?;
    writeln!(w)?;
    Ok(())
}

pub fn load_ocsvm<R: Read>(r: R) -> Result<(OcsvmModel, String), PersistError> {
    let file: OcsvmModelFile = serde_json::from_reader(r)?;
    check_container(OCSVM_FORMAT, &file.format, file.version)?;
    let record = &file.support_vectors;
    if record.data.len() != record.rows * record.cols {
        return Err(PersistError::Corrupt("support vector matrix shape".into()));
    }
    let support_vectors: Vec<Vec<f64>> = record
        .data
        .chunks(record.cols.max(1))
        .take(record.rows)
        .map(<[f64]>::to_vec)
        .collect();
    let model = OcsvmModel::from_parts(
        support_vectors,
        file.alphas,
        file.support_indices,
        file.rho,
        file.gamma,
        file.nu,
        file.scaler,
    )
    .map_err(|e| PersistError::Corrupt(e.to_string()))?;
    Ok((model, file.vocab_sha256))
}

#[derive(Debug, Serialize, Deserialize)]
struct LstmModelFile {
    format: String,
    version: u32,
    vocab_sha256: String,
    input_dim: usize,
    hidden_units: usize,
    w_input: MatrixRecord,
    w_forget: MatrixRecord,
    w_cell: MatrixRecord,
    w_output: MatrixRecord,
    u_input: MatrixRecord,
    u_forget: MatrixRecord,
    u_cell: MatrixRecord,
    u_output: MatrixRecord,
    b_input: Vec<f64>,
    b_forget: Vec<f64>,
    b_cell: Vec<f64>,
    b_output: Vec<f64>,
    head_w: MatrixRecord,
    head_b: Vec<f64>,
    scaler: Scaler,
    idf: IdfWeights,
    threshold: Option<f64>,
    hyperparams: LstmHyperparams,
}

pub fn save_lstm<W: Write>(
    model: &LstmPredictor,
    vocab_sha256: &str,
    mut w: W,
) -> Result<(), PersistError> {
    let params = model.params();
    let file = LstmModelFile {
        format: LSTM_FORMAT.to_string(),
        version: FORMAT_VERSION,
        vocab_sha256: vocab_sha256.to_string(),
        input_dim: model.input_dim(),
        hidden_units: model.hidden_units(),
        w_input: MatrixRecord::from_matrix(&params.w[0]),
        w_forget: MatrixRecord::from_matrix(&params.w[1]),
        w_cell: MatrixRecord::from_matrix(&params.w[2]),
        w_output: MatrixRecord::from_matrix(&params.w[3]),
        u_input: MatrixRecord::from_matrix(&params.u[0]),
        u_forget: MatrixRecord::from_matrix(&params.u[1]),
        u_cell: MatrixRecord::from_matrix(&params.u[2]),
        u_output: MatrixRecord::from_matrix(&params.u[3]),
        b_input: params.b[0].as_slice().to_vec(),
        b_forget: params.b[1].as_slice().to_vec(),
        b_cell: params.b[2].as_slice().to_vec(),
        b_output: params.b[3].as_slice().to_vec(),
        head_w: MatrixRecord::from_matrix(&params.head_w),
        head_b: params.head_b.as_slice().to_vec(),
        scaler: model.scaler().clone(),
        idf: model.idf().clone(),
        threshold: model.threshold(),
        hyperparams: *model.hyperparams(),
    };
    serde_json::to_writer(&mut w, &file)?;
    writeln!(w)?;
    Ok(())
}

pub fn load_lstm<R: Read>(r: R) -> Result<(LstmPredictor, String), PersistError> {
    let file: LstmModelFile = serde_json::from_reader(r)?;
    check_container(LSTM_FORMAT, &file.format, file.version)?;
    let params = crate::lstm::Params {
        w: [
            file.w_input.to_matrix()?,
            file.w_forget.to_matrix()?,
            file.w_cell.to_matrix()?,
            file.w_output.to_matrix()?,
        ],
        u: [
            file.u_input.to_matrix()?,
            file.u_forget.to_matrix()?,
            file.u_cell.to_matrix()?,
            file.u_output.to_matrix()?,
        ],
        b: [
            DVector::from_vec(file.b_input),
            DVector::from_vec(file.b_forget),
            DVector::from_vec(file.b_cell),
            DVector::from_vec(file.b_output),
        ],
        head_w: file.head_w.to_matrix()?,
        head_b: DVector::from_vec(file.head_b),
    };
    let model = LstmPredictor::from_parts(
        params,
        file.scaler,
        file.idf,
        file.threshold,
        file.hyperparams,
    )
    .map_err(|e| PersistError::Corrupt(e.to_string()))?;
    if model.input_dim() != file.input_dim || model.hidden_units() != file.hidden_units {
        return Err(PersistError::Corrupt(
            "declared dimensions disagree with tensors".into(),
        ));
    }
    Ok((model, file.vocab_sha256))
}

/// Manifest binding a set of trained models to the vocabulary, window
/// interval, seeds, and hyper-parameters they were produced with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub interval_ns: u64,
    pub vocabulary: Vec<String>,
    pub vocab_sha256: String,
    pub seed: u64,
    pub detectors: Vec<String>,
    pub pca_k: usize,
    pub nu: f64,
    pub gamma: crate::ocsvm::Gamma,
    pub fpr_target: f64,
    pub lstm: LstmHyperparams,
}

impl Manifest {
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), PersistError> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self, PersistError> {
        let manifest: Manifest = serde_json::from_reader(r)?;
        check_container(MANIFEST_FORMAT, &manifest.format.clone(), manifest.version)?;
        Ok(manifest)
    }
}
