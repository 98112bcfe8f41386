//! Type and constant declarations in scope.

use std::collections::{BTreeMap, BTreeSet};

use crate::speclogic::names as sp;
use crate::terms::{Name, Ty};

/// Built-in base types.
pub const O: &str = "o";
pub const OLIST: &str = "olist";
pub const GOAL: &str = "goal";
pub const NAT: &str = "nt";

pub fn o() -> Ty {
    Ty::base(O)
}

pub fn olist() -> Ty {
    Ty::base(OLIST)
}

pub fn goal() -> Ty {
    Ty::base(GOAL)
}

pub fn nat() -> Ty {
    Ty::base(NAT)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    kinds: BTreeSet<Name>,
    consts: BTreeMap<Name, Ty>,
}

impl Default for Signature {
    fn default() -> Self {
        Signature::new()
    }
}

impl Signature {
    /// The signature with the built-in types and constructors.
    pub fn new() -> Signature {
        let mut s = Signature {
            kinds: BTreeSet::new(),
            consts: BTreeMap::new(),
        };
        for k in [O, OLIST, GOAL, NAT] {
            s.kinds.insert(k.into());
        }
        s.consts.insert("nil".into(), olist());
        s.consts
            .insert("::".into(), Ty::arrows([o(), olist()], olist()));
        s.consts.insert("z".into(), nat());
        s.consts.insert("s".into(), Ty::arrow(nat(), nat()));
        s.consts.insert(sp::ATM.into(), Ty::arrow(o(), goal()));
        s.consts
            .insert(sp::AND.into(), Ty::arrows([goal(), goal()], goal()));
        s.consts
            .insert(sp::IMP.into(), Ty::arrows([o(), goal()], goal()));
        s.consts.insert(sp::TT.into(), goal());
        s
    }

    pub fn has_kind(&self, k: &str) -> bool {
        self.kinds.contains(k)
    }

    pub fn add_kind(&mut self, k: &str) -> bool {
        self.kinds.insert(k.into())
    }

    pub fn const_ty(&self, c: &str) -> Option<&Ty> {
        self.consts.get(c)
    }

    pub fn add_const(&mut self, c: &str, ty: Ty) -> bool {
        if self.consts.contains_key(c) {
            return false;
        }
        self.consts.insert(c.into(), ty);
        true
    }

    pub fn consts(&self) -> impl Iterator<Item = (&Name, &Ty)> {
        self.consts.iter()
    }

    pub fn kinds(&self) -> impl Iterator<Item = &Name> {
        self.kinds.iter()
    }

    /// Whether every base type in `ty` is declared.
    pub fn well_kinded(&self, ty: &Ty) -> bool {
        match ty {
            Ty::Base(b) => self.kinds.contains(b),
            Ty::Prop => true,
            Ty::Arrow(a, b) => self.well_kinded(a) && self.well_kinded(b),
        }
    }
}
