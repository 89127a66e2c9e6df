//! Transformer inference through an ONNX graph, pooled to one vector per
//! prompt. The heavy runtime stays behind the `onnx` cargo feature; every
//! other feature of the crate works from cache files alone.

use std::path::Path;

use tract_onnx::prelude::*;

use crate::embedding::{
    mean_pool, EmbedError, EmbeddingMatrix, EmbeddingProvider, Pooling, ProviderKind,
};
use crate::tokenizer::TokenSequence;

type RunnableOnnx = SimplePlan<TypedFact, Box<dyn TypedOp>, Graph<TypedFact, Box<dyn TypedOp>>>;

/// Encoder inputs recognized by name, with positional fallback for
/// exports that renamed them. Inputs that are neither ids nor mask
/// (token type ids, typically) are fed zeros.
#[derive(Debug, Clone, Copy)]
struct InputLayout {
    input_ids: usize,
    attention_mask: Option<usize>,
    arity: usize,
}

/// ONNX-backed [`EmbeddingProvider`]. Sequences are padded to the fixed
/// length the graph was compiled for; the output dimension is read from
/// the model itself on a warm-up run.
pub struct OnnxEncoder {
    plan: RunnableOnnx,
    layout: InputLayout,
    seq_len: usize,
    pad_id: u32,
    pooling: Pooling,
    dim: usize,
}

fn runtime_err<E: std::fmt::Display>(e: E) -> EmbedError {
    EmbedError::Runtime(e.to_string())
}

impl OnnxEncoder {
    /// Load and optimize a graph for `[1, seq_len]` integer inputs.
    pub fn load(
        path: &Path,
        seq_len: usize,
        pad_id: u32,
        pooling: Pooling,
    ) -> Result<Self, EmbedError> {
        let mut model = tract_onnx::onnx()
            .model_for_path(path)
            .map_err(runtime_err)?;

        let input_outlets = model.input_outlets().map_err(runtime_err)?.to_vec();
        let names: Vec<String> = input_outlets
            .iter()
            .map(|outlet| model.node(outlet.node).name.clone())
            .collect();
        let position = |needle: &str| names.iter().position(|n| n.contains(needle));
        let layout = match position("input_ids") {
            Some(ids) => InputLayout {
                input_ids: ids,
                attention_mask: position("attention_mask"),
                arity: names.len(),
            },
            // Unrecognized names: assume the conventional export order.
            None => InputLayout {
                input_ids: 0,
                attention_mask: (names.len() > 1).then_some(1),
                arity: names.len(),
            },
        };

        let fact = InferenceFact::dt_shape(i64::datum_type(), tvec!(1, seq_len as i64));
        for index in 0..names.len() {
            model = model
                .with_input_fact(index, fact.clone())
                .map_err(runtime_err)?;
        }
        let plan = model
            .into_optimized()
            .map_err(runtime_err)?
            .into_runnable()
            .map_err(runtime_err)?;

        let mut encoder = Self {
            plan,
            layout,
            seq_len,
            pad_id,
            pooling,
            dim: 0,
        };
        // Warm-up run fixes the hidden size from the model output shape.
        let warmup = encoder.run_hidden(&vec![pad_id; seq_len], &vec![1u8; seq_len])?;
        encoder.dim = warmup.1;
        Ok(encoder)
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// One forward pass; returns the flattened [T, d] hidden states and d.
    fn run_hidden(&self, ids: &[u32], _mask: &[u8]) -> Result<(Vec<f64>, usize), EmbedError> {
        let ids_tensor = tract_ndarray::Array2::<i64>::from_shape_vec(
            (1, self.seq_len),
            ids.iter().map(|&v| v as i64).collect(),
        )
        .map_err(runtime_err)?
        .into_tensor();
        let mask_tensor = tract_ndarray::Array2::<i64>::from_shape_vec(
            (1, self.seq_len),
            _mask.iter().map(|&v| v as i64).collect(),
        )
        .map_err(runtime_err)?
        .into_tensor();
        let types_tensor =
            tract_ndarray::Array2::<i64>::zeros((1, self.seq_len)).into_tensor();

        let mut inputs: Vec<TValue> = vec![TValue::from(types_tensor); self.layout.arity];
        inputs[self.layout.input_ids] = TValue::from(ids_tensor);
        if let Some(i) = self.layout.attention_mask {
            inputs[i] = TValue::from(mask_tensor);
        }

        let outputs = self.plan.run(TVec::from_vec(inputs)).map_err(runtime_err)?;
        let hidden = outputs[0].to_array_view::<f32>().map_err(runtime_err)?;
        let shape = hidden.shape();
        if shape.len() != 3 || shape[0] != 1 || shape[1] != self.seq_len {
            return Err(EmbedError::Runtime(format!(
                "expected hidden states of shape [1, {}, d], got {shape:?}",
                self.seq_len
            )));
        }
        let dim = shape[2];
        let flat: Vec<f64> = hidden.iter().map(|&v| v as f64).collect();
        Ok((flat, dim))
    }

    fn embed_one(&self, sequence: &TokenSequence) -> Result<Vec<f32>, EmbedError> {
        if sequence.len() > self.seq_len {
            return Err(EmbedError::Runtime(format!(
                "sequence of length {} exceeds the model's fixed length {}",
                sequence.len(),
                self.seq_len
            )));
        }
        let mut padded = sequence.clone();
        padded.pad_to(self.seq_len, self.pad_id);
        let (hidden, dim) = self.run_hidden(&padded.ids, &padded.attention_mask)?;
        let pooled = match self.pooling {
            Pooling::Mean => mean_pool(&hidden, dim, &padded.attention_mask)?,
            Pooling::Cls => hidden[..dim].to_vec(),
        };
        Ok(pooled.into_iter().map(|v| v as f32).collect())
    }
}

impl EmbeddingProvider for OnnxEncoder {
    fn kind(&self) -> ProviderKind {
        ProviderKind::TransformerRuntime
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, sequences: &[TokenSequence]) -> Result<EmbeddingMatrix, EmbedError> {
        if sequences.is_empty() {
            return Err(EmbedError::NoSequences);
        }
        let mut rows = Vec::with_capacity(sequences.len());
        for sequence in sequences {
            rows.push(self.embed_one(sequence)?);
        }
        EmbeddingMatrix::from_rows(rows)
    }
}
