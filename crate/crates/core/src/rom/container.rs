use super::{Deim, ParameterSampler, ReducedBasis, RomError, RomOperators};
use nalgebra::{DMatrix, DVector};

pub const CONTAINER_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"UFLOWROM";

/// Everything the online phase needs, persisted by the offline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RomArtifact {
    pub mesh_hash: String,
    pub nu: f64,
    pub training_mus: Vec<f64>,
    /// Normalized POD eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub lambda_1: f64,
    pub deim: Deim,
    pub ops: RomOperators,
}

impl RomArtifact {
    pub fn basis(&self) -> ReducedBasis {
        ReducedBasis {
            modes: self.ops.modes.clone(),
            eigenvalues: self.eigenvalues.clone(),
            lambda_1: self.lambda_1,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(CONTAINER_VERSION);
        w.u64(self.ops.n_r() as u64);
        w.u64(self.ops.n_m() as u64);
        w.u64(self.ops.n_dofs() as u64);
        w.bytes(self.mesh_hash.as_bytes());

        w.f64(self.nu);
        w.f64(self.ops.sampler.min);
        w.f64(self.ops.sampler.max);
        w.u64(self.ops.sampler.count as u64);
        w.vec(&self.training_mus);
        w.vec(&self.eigenvalues);
        w.f64(self.lambda_1);
        for m in &self.ops.modes {
            w.vec(m);
        }
        for u in &self.deim.basis {
            w.vec(u);
        }
        w.u64(self.deim.indices.len() as u64);
        for &i in &self.deim.indices {
            w.u64(i as u64);
        }
        w.vec(&self.deim.singular_values);
        w.vec(&self.ops.lifting);
        w.vec(self.ops.a_l.as_slice());
        w.vec(self.ops.a_r.as_slice());
        w.vec(self.ops.f_r.as_slice());
        w.vec(self.ops.w.as_slice());
        w.vec(self.ops.q0.as_slice());
        w.vec(self.ops.q1.as_slice());
        for q in &self.ops.q2 {
            w.vec(q.as_slice());
        }
        w.0
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, RomError> {
        let mut r = Reader { data, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(RomError::Format("not a reduced-model container".into()));
        }
        let version = r.u32()?;
        if version != CONTAINER_VERSION {
            return Err(RomError::Format(format!("unsupported version {version}")));
        }
        let nr = r.u64()? as usize;
        let nm = r.u64()? as usize;
        let n = r.u64()? as usize;
        let mesh_hash = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| RomError::Format("mesh hash".into()))?;

        let nu = r.f64()?;
        let sampler = ParameterSampler {
            min: r.f64()?,
            max: r.f64()?,
            count: r.u64()? as usize,
        };
        let training_mus = r.vec()?;
        let eigenvalues = r.vec()?;
        let lambda_1 = r.f64()?;
        let modes = (0..nr).map(|_| r.vec_of(n)).collect::<Result<Vec<_>, _>>()?;
        let basis = (0..nm).map(|_| r.vec_of(n)).collect::<Result<Vec<_>, _>>()?;
        if r.u64()? as usize != nm {
            return Err(RomError::Format("index count".into()));
        }
        let indices = (0..nm).map(|_| r.u64().map(|i| i as usize)).collect::<Result<Vec<_>, _>>()?;
        if indices.iter().any(|&i| i >= n) {
            return Err(RomError::Format("interpolation index out of range".into()));
        }
        let singular_values = r.vec()?;
        let lifting = r.vec_of(n)?;
        let a_l = DVector::from_vec(r.vec_of(nr)?);
        let a_r = DMatrix::from_vec(nr, nr, r.vec_of(nr * nr)?);
        let f_r = DVector::from_vec(r.vec_of(nr)?);
        let w = DMatrix::from_vec(nr, nm, r.vec_of(nr * nm)?);
        let q0 = DVector::from_vec(r.vec_of(nm)?);
        let q1 = DMatrix::from_vec(nm, nr, r.vec_of(nm * nr)?);
        let q2 = (0..nm)
            .map(|_| r.vec_of(nr * nr).map(|v| DMatrix::from_vec(nr, nr, v)))
            .collect::<Result<Vec<_>, _>>()?;
        if r.pos != data.len() {
            return Err(RomError::Format("trailing bytes".into()));
        }
        Ok(Self {
            mesh_hash,
            nu,
            training_mus,
            eigenvalues,
            lambda_1,
            deim: Deim { basis, indices, singular_values },
            ops: RomOperators { a_l, a_r, f_r, w, q0, q1, q2, lifting, modes, sampler },
        })
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
    fn vec(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|&x| self.f64(x));
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RomError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| RomError::Format("truncated".into()))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32, RomError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, RomError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, RomError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn bytes(&mut self) -> Result<&'a [u8], RomError> {
        let n = self.u64()? as usize;
        self.take(n)
    }
    fn vec(&mut self) -> Result<Vec<f64>, RomError> {
        let n = self.u64()? as usize;
        if n > (self.data.len() - self.pos) / 8 {
            return Err(RomError::Format("truncated".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn vec_of(&mut self, n: usize) -> Result<Vec<f64>, RomError> {
        let v = self.vec()?;
        if v.len() != n {
            return Err(RomError::Format(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    }
}
