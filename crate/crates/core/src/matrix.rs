use std::fmt;

/// Dense square matrix indexed by `(action, action)`.
#[derive(Clone, PartialEq)]
pub struct ActionMatrix<V> {
    n: usize,
    data: Vec<V>,
}

impl<V: Copy> ActionMatrix<V> {
    pub fn filled(n: usize, v: V) -> Self {
        Self {
            n,
            data: vec![v; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                data.push(f(a, b));
            }
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> V {
        self.data[a * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: V) {
        self.data[a * self.n + b] = v;
    }

    pub fn map<W: Copy>(&self, f: impl Fn(V) -> W) -> ActionMatrix<W> {
        ActionMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<W: Copy, U: Copy>(
        &self,
        other: &ActionMatrix<W>,
        f: impl Fn(V, W) -> U,
    ) -> ActionMatrix<U> {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        ActionMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[V]> {
        self.data.chunks(self.n.max(1))
    }
}

/// Boolean relation between actions.
pub type BoolMatrix = ActionMatrix<bool>;

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        Self::filled(n, false)
    }

    pub fn ones(n: usize) -> Self {
        Self::filled(n, true)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn and_not(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn not(&self) -> Self {
        self.map(|a| !a)
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&v| v)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

impl<V: fmt::Debug> fmt::Debug for ActionMatrix<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.data.chunks(self.n.max(1)))
            .finish()
    }
}
