//! A complete `(n, k)` code: parameters, MDS coefficients, and every parity
//! equation.

use thiserror::Error;

use crate::class_a::{
    class_a_equations, encode_class_a, mds_coefficients, ClassAError, MdsCoefficients,
};
use crate::class_b::{build_class_b, ClassBPlan};
use crate::gf::{Counting, Field, OpCount};
use crate::model::{
    CodeArray, CodeParams, DataBlock, NodeKind, ParamError, ParityEquation, SymbolPos,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    ClassA(#[from] ClassAError),
    #[error("inconsistent code description: {0}")]
    Malformed(String),
}

/// Field operations spent encoding one stripe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOps {
    pub class_a: OpCount,
    pub class_b: OpCount,
}

#[derive(Debug, Clone)]
pub struct Code {
    params: CodeParams,
    field: Field,
    coeffs: MdsCoefficients,
    /// column-major: `(col - k) * k + row`
    class_a: Vec<ParityEquation>,
    plan: ClassBPlan,
}

impl Code {
    pub fn new(params: CodeParams) -> Result<Self, CodeError> {
        params.validate()?;
        let field = Field::new(params.field());
        let coeffs = mds_coefficients(&field, params.k(), params.n_a())?;
        let class_a = class_a_equations(&params, &coeffs);
        let plan = if params.class_b_nodes() == 0 {
            ClassBPlan::empty(&params)
        } else {
            build_class_b(&params).expect("at least one Class B node")
        };
        Ok(Self {
            params,
            field,
            coeffs,
            class_a,
            plan,
        })
    }

    /// Rebuild a code from stored parts, checking only their shape.
    pub fn from_parts(
        params: CodeParams,
        coeffs: MdsCoefficients,
        class_a: Vec<ParityEquation>,
        plan: ClassBPlan,
    ) -> Result<Self, CodeError> {
        params.validate()?;
        let k = params.k();
        if coeffs.k() != k || coeffs.n_a() != params.n_a() {
            return Err(CodeError::Malformed("coefficient table shape".into()));
        }
        for (idx, eq) in class_a.iter().enumerate() {
            let want = SymbolPos::new(idx % k, k + idx / k);
            if eq.target() != want {
                return Err(CodeError::Malformed(format!(
                    "Class A equation {idx} targets {} instead of {want}",
                    eq.target()
                )));
            }
        }
        if class_a.len() != k * (params.n_a() - k) {
            return Err(CodeError::Malformed("Class A equation count".into()));
        }
        if plan.nodes().len() != params.class_b_nodes() {
            return Err(CodeError::Malformed("Class B node count".into()));
        }
        for (m, node) in plan.nodes().iter().enumerate() {
            for (t, eq) in node.iter().enumerate() {
                if eq.target() != SymbolPos::new(t, params.n_a() + m) || node.len() != k {
                    return Err(CodeError::Malformed(format!("Class B node {m} layout")));
                }
                if eq
                    .terms()
                    .iter()
                    .any(|&(_, c)| c != crate::gf::FieldElement::ONE)
                {
                    return Err(CodeError::Malformed(format!(
                        "Class B parity {} has a non-unit coefficient",
                        eq.target()
                    )));
                }
            }
        }
        Ok(Self {
            field: Field::new(params.field()),
            params,
            coeffs,
            class_a,
            plan,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coefficients(&self) -> &MdsCoefficients {
        &self.coeffs
    }

    pub fn class_a_equations(&self) -> &[ParityEquation] {
        &self.class_a
    }

    pub fn plan(&self) -> &ClassBPlan {
        &self.plan
    }

    /// Equation of the parity at `pos`, `None` for data positions.
    pub fn equation(&self, pos: SymbolPos) -> Option<&ParityEquation> {
        let k = self.params.k();
        match self.params.node_kind(pos.col) {
            NodeKind::Data => None,
            NodeKind::ClassA => self.class_a.get((pos.col - k) * k + pos.row),
            NodeKind::ClassB => self
                .plan
                .nodes()
                .get(pos.col - self.params.n_a())
                .and_then(|node| node.get(pos.row)),
        }
    }

    /// Every parity equation, column by column.
    pub fn equations(&self) -> impl Iterator<Item = &ParityEquation> {
        self.class_a.iter().chain(self.plan.equations())
    }

    pub fn encode(&self, data: &DataBlock) -> CodeArray {
        self.encode_counting(data).0
    }

    pub fn encode_counting(&self, data: &DataBlock) -> (CodeArray, EncodeOps) {
        let k = self.params.k();
        assert_eq!(data.k(), k, "data block size");
        let mut array = CodeArray::zeros(k, self.params.n());
        for i in 0..k {
            for j in 0..k {
                let p = SymbolPos::new(i, j);
                array.set(p, data.get(p));
            }
        }

        let mut a_ops = Counting::new(&self.field);
        let parity = encode_class_a(&self.params, &self.coeffs, data, &mut a_ops);
        for (i, row) in parity.iter().enumerate() {
            for (jj, &v) in row.iter().enumerate() {
                array.set(SymbolPos::new(i, k + jj), v);
            }
        }

        let mut b_ops = Counting::new(&self.field);
        for eq in self.plan.equations() {
            array.set(eq.target(), eq.evaluate_sum_counting(&mut b_ops, data));
        }
        (
            array,
            EncodeOps {
                class_a: a_ops.ops(),
                class_b: b_ops.ops(),
            },
        )
    }

    /// The code with its highest Class B node removed.
    pub fn punctured(&self) -> Option<Self> {
        let params = self.params.punctured()?;
        let plan = self.plan.punctured(&self.params)?;
        Some(Self {
            params,
            field: self.field.clone(),
            coeffs: self.coeffs.clone(),
            class_a: self.class_a.clone(),
            plan,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use rand::{rngs::StdRng, SeedableRng};

    fn code_10_5() -> Code {
        Code::new(CodeParams::from_lengths(10, 5, 7, 1, FieldSpec::default()).unwrap()).unwrap()
    }

    #[test]
    fn encoding_agrees_with_equations() {
        let code = code_10_5();
        let mut rng = StdRng::seed_from_u64(1);
        let data = DataBlock::random(5, code.params().field(), &mut rng);
        let array = code.encode(&data);
        assert_eq!(array.data_block(), data);
        for eq in code.equations() {
            assert_eq!(array.get(eq.target()), eq.evaluate(code.field(), &data));
            assert_eq!(code.equation(eq.target()), Some(eq));
        }
        assert_eq!(code.equations().count(), 25);
        assert!(code.equation(SymbolPos::new(0, 3)).is_none());
    }

    #[test]
    fn per_row_encoding_counts() {
        let code = code_10_5();
        let (_, ops) = code.encode_counting(&DataBlock::zeros(5));
        // k rows; per row 2·5 multiplications, 2·4+1 additions, and 2+1+0 Class B additions
        assert_eq!(ops.class_a, OpCount { mul: 50, add: 45 });
        assert_eq!(ops.class_b, OpCount { mul: 0, add: 15 });
    }

    #[test]
    fn puncturing_drops_last_column() {
        let code = code_10_5();
        let p = code.punctured().unwrap();
        assert_eq!(p.params().n(), 9);
        let data = DataBlock::random(5, FieldSpec::default(), &mut StdRng::seed_from_u64(5));
        let full = code.encode(&data);
        let cut = p.encode(&data);
        for j in 0..9 {
            assert_eq!(full.column(j), cut.column(j));
        }
        let a_only = p.punctured().unwrap().punctured().unwrap();
        assert!(a_only.punctured().is_none());
    }

    #[test]
    fn from_parts_round_trip_and_rejects_garbage() {
        let code = code_10_5();
        let again = Code::from_parts(
            *code.params(),
            code.coefficients().clone(),
            code.class_a_equations().to_vec(),
            code.plan().clone(),
        )
        .unwrap();
        assert_eq!(again.equations().count(), 25);

        let mut shuffled = code.class_a_equations().to_vec();
        shuffled.swap(0, 1);
        assert!(matches!(
            Code::from_parts(
                *code.params(),
                code.coefficients().clone(),
                shuffled,
                code.plan().clone()
            ),
            Err(CodeError::Malformed(_))
        ));
    }
}
