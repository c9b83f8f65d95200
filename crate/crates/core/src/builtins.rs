//! Schemes shipped with the library.
//!
//! The 23-product `⟨3,3,3⟩` scheme appears three ways: as the raw coefficient
//! file, as its unreduced formulae (110 additions) and as the reduced
//! schedule (59 additions). The two scheme forms differ by per-product sign
//! scalings and are both valid; they are not entry-wise equal.

use crate::io::{parse_scheme, parse_slp};
use crate::scheme::{BilinearScheme, Dims};
use crate::slp::StraightLineProgram;
use crate::verify::extract_scheme;

/// Coefficient file of the 59-addition scheme, rows `U` / `V` / `W`.
pub const STAPLETON59_FILE: &str = "\
0 1 0 0 0 0 1 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0
1 0 0 0 0 0 0 -1 0 0 -1 0 1 -1 1 0 0 0 0 0 0 0 0
0 0 0 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 -1 0 0
0 0 1 0 1 0 0 0 0 0 0 -1 0 0 1 1 1 -1 1 0 0 0 -1
0 0 -1 0 0 0 0 0 0 1 0 0 0 0 0 -1 -1 0 -1 0 0 0 0
0 0 -1 0 -1 0 0 0 1 0 0 0 0 0 0 0 -1 0 -1 0 0 0 0
0 0 1 0 1 0 0 0 0 0 -1 -1 1 0 1 1 1 0 0 0 0 -1 -1
0 0 -1 0 0 0 0 1 0 0 1 0 -1 0 -1 -1 -1 0 0 0 0 0 0
0 0 -1 -1 -1 0 0 0 0 0 0 1 0 0 0 0 0 0 0 -1 0 1 0
#
0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 1 0 0 0 0 1
0 1 0 0 0 0 0 0 0 0 0 -1 0 0 0 0 0 1 0 -1 0 -1 0
0 0 0 0 0 0 0 -1 0 0 -1 -1 1 0 1 0 0 1 0 -1 0 -1 -1
0 0 0 0 0 0 0 0 0 1 0 0 0 1 -1 -1 0 0 0 0 0 0 1
1 0 0 0 0 0 0 0 1 0 0 -1 1 0 0 0 1 1 -1 -1 0 -1 0
0 0 0 0 0 0 0 -1 1 0 0 -1 1 0 1 1 1 1 -1 -1 0 -1 -1
0 0 0 0 1 0 0 0 -1 0 0 1 0 0 0 0 0 0 0 0 -1 0 1
0 0 0 0 0 1 0 0 -1 0 0 0 0 0 0 0 0 0 0 -1 0 0 0
0 0 1 1 0 0 0 0 -1 0 0 0 0 0 0 -1 -1 0 0 0 0 0 0
#
0 0 0 0 0 0 1 0 0 0 0 0 0 -1 0 0 0 0 0 0 1 0 0
1 1 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
-1 0 -1 1 0 0 0 0 0 0 -1 0 1 0 0 0 -1 0 -1 0 0 0 0
0 0 0 0 -1 0 0 0 0 1 0 -1 0 0 0 0 0 -1 0 0 0 1 0
-1 0 0 0 1 0 0 0 -1 -1 0 1 1 1 -1 1 -1 0 0 0 0 -1 0
1 0 0 0 0 0 0 0 0 1 0 0 -1 -1 1 -1 1 0 1 0 0 0 0
0 0 0 0 0 0 0 -1 0 0 0 1 0 -1 1 0 0 1 0 0 0 -1 -1
1 0 0 0 0 0 0 1 0 0 0 0 -1 0 0 0 0 0 0 1 0 1 0
-1 0 -1 0 0 0 0 -1 0 0 0 0 1 0 0 0 -1 0 -1 0 0 0 0
";

/// Unreduced formulae of the same algorithm, one product or output per line.
pub const STAPLETON59_NAIVE: &str = "\
M0 = A1 * B4
M1 = A0 * B1
M2 = (A3 - A4 - A5 + A6 - A7 - A8) * B8
M3 = (A2 - A8) * B8
M4 = (A3 - A5 + A6 - A8) * B6
M5 = A2 * B7
M6 = A0 * B0
M7 = (A1 - A7) * (B2 + B5)
M8 = A5 * (B4 + B5 - B6 - B7 - B8)
M9 = A4 * B3
M10 = (A0 - A1 - A6 + A7) * B2
M11 = (A3 + A6 - A8) * (B1 + B2 + B4 + B5 - B6)
M12 = (A1 + A6 - A7) * (B2 + B4 + B5)
M13 = A1 * B3
M14 = (A1 + A3 + A6 - A7) * (B2 - B3 + B5)
M15 = (A3 - A4 + A6 - A7) * (B3 - B5 + B8)
M16 = (A3 - A4 - A5 + A6 - A7) * (B4 + B5 - B8)
M17 = A3 * (B0 + B1 + B2 + B4 + B5)
M18 = (A3 - A4 - A5) * (B4 + B5)
M19 = A8 * (B1 + B2 + B4 + B5 + B7)
M20 = A2 * B6
M21 = (A6 - A8) * (B1 + B2 + B4 + B5)
M22 = (A3 + A6) * (B0 - B2 + B3 - B5 + B6)
C0 = M6 + M13 + M20
C1 = M0 + M1 + M5
C2 = -M0 - M2 + M3 + M10 + M12 - M16 + M18
C3 = -M4 + M9 - M11 + M17 + M21
C4 = -M0 + M4 - M8 - M9 + M11 + M12 - M13 - M14 - M15 - M16 - M21
C5 = M0 + M9 - M12 + M13 + M14 + M15 + M16 - M18
C6 = -M7 + M11 + M13 + M14 - M17 - M21 + M22
C7 = M0 + M7 - M12 + M19 + M21
C8 = -M0 - M2 - M7 + M12 - M16 + M18
";

/// The 59-addition schedule in implementation order.
pub const STAPLETON59_SLP: &str = "\
t0 = A3 + A6
t1 = A1 - A7
t2 = A4 + A5
t3 = A7 - t0
t4 = A6 + t1
t5 = A8 - t0
t6 = t2 + t3
u0 = B2 + B5
u1 = B4 + u0
u2 = B1 + u1
u3 = B4 + B5
u4 = B3 - u0
u5 = B8 - u3
M0 = A1 * B4
M1 = A0 * B1
M2 = (A8 + t6) * B8
M3 = (A2 - A8) * B8
M4 = (A5 + t5) * B6
M5 = A2 * B7
M6 = A0 * B0
M7 = t1 * u0
M8 = A5 * (B6 + B7 + u5)
M9 = A4 * B3
M10 = (A0 - t4) * B2
M11 = t5 * (B6 - u2)
M12 = t4 * u1
M13 = A1 * B3
M14 = (t0 + t1) * u4
M15 = (A4 + t3) * (B3 - B5 + B8)
M16 = t6 * u5
M17 = A3 * (B0 + u2)
M18 = (A3 - t2) * u3
M19 = A8 * (B7 + u2)
M20 = A2 * B6
M21 = (A6 - A8) * u2
M22 = t0 * (B0 + B6 + u4)
v0 = M0 - M12
v1 = M16 + v0
v2 = M11 - M21
v3 = M14 - M13
v4 = M18 - v1
v5 = M2 + v4
v6 = M4 + M9
v7 = M15 + v3
v8 = M17 - v2
C0 = M6 + M13 + M20
C1 = M0 + M1 + M5
C2 = M3 + M10 + v5
C3 = v6 + v8
C4 = M8 - v1 + v2 - v6 + v7
C5 = M9 - v4 - v7
C6 = -M7 + M22 - v3 - v8
C7 = M7 + M19 + M21 + v0
C8 = -M7 + v5
";

/// The classical seven-product `⟨2,2,2⟩` algorithm.
pub const STRASSEN: &str = "\
M0 = (A0 + A3) * (B0 + B3)
M1 = (A2 + A3) * B0
M2 = A0 * (B1 - B3)
M3 = A3 * (B2 - B0)
M4 = (A0 + A1) * B3
M5 = (A2 - A0) * (B0 + B1)
M6 = (A1 - A3) * (B2 + B3)
C0 = M0 + M3 - M4 + M6
C1 = M2 + M4
C2 = M1 + M3
C3 = M0 - M1 + M2 + M5
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinForm {
    /// A coefficient-matrix scheme.
    Scheme,
    /// A straight-line program.
    Program,
}

/// A named entry of the catalog.
#[derive(Clone, Copy, Debug)]
pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    pub form: BuiltinForm,
    text: &'static str,
}

#[derive(Clone, Debug)]
pub enum BuiltinValue {
    Scheme(BilinearScheme),
    Program(StraightLineProgram),
}

pub const CATALOG: &[Builtin] = &[
    Builtin {
        name: "stapleton59-file",
        description: "rank-23 <3,3,3> scheme, coefficient file",
        form: BuiltinForm::Scheme,
        text: STAPLETON59_FILE,
    },
    Builtin {
        name: "stapleton59-naive",
        description: "rank-23 <3,3,3> scheme read from its unreduced formulae",
        form: BuiltinForm::Scheme,
        text: STAPLETON59_NAIVE,
    },
    Builtin {
        name: "stapleton59-slp",
        description: "59-addition schedule of the rank-23 <3,3,3> scheme",
        form: BuiltinForm::Program,
        text: STAPLETON59_SLP,
    },
    Builtin {
        name: "strassen",
        description: "Strassen's rank-7 <2,2,2> scheme",
        form: BuiltinForm::Scheme,
        text: STRASSEN,
    },
];

impl Builtin {
    pub fn text(&self) -> &'static str {
        self.text
    }

    pub fn load(&self) -> BuiltinValue {
        match self.name {
            "stapleton59-file" => BuiltinValue::Scheme(
                parse_scheme(self.text, Some(Dims::square(3)))
                    .expect("embedded coefficient file")
                    .with_name(self.name),
            ),
            "stapleton59-slp" => BuiltinValue::Program(
                parse_slp(self.text, Some(Dims::square(3))).expect("embedded schedule"),
            ),
            _ => {
                let dims = if self.name == "strassen" {
                    Dims::square(2)
                } else {
                    Dims::square(3)
                };
                let slp = parse_slp(self.text, Some(dims)).expect("embedded formulae");
                BuiltinValue::Scheme(
                    extract_scheme(&slp)
                        .expect("embedded formulae are bilinear")
                        .with_name(self.name),
                )
            }
        }
    }
}

pub fn find(name: &str) -> Option<&'static Builtin> {
    CATALOG.iter().find(|b| b.name == name)
}

fn scheme(name: &str) -> BilinearScheme {
    match find(name).expect("catalog entry").load() {
        BuiltinValue::Scheme(s) => s,
        BuiltinValue::Program(_) => unreachable!("{name} is a scheme"),
    }
}

pub fn stapleton59_file() -> BilinearScheme {
    scheme("stapleton59-file")
}

pub fn stapleton59_naive() -> BilinearScheme {
    scheme("stapleton59-naive")
}

pub fn strassen() -> BilinearScheme {
    scheme("strassen")
}

pub fn stapleton59_slp() -> StraightLineProgram {
    match find("stapleton59-slp").expect("catalog entry").load() {
        BuiltinValue::Program(p) => p,
        BuiltinValue::Scheme(_) => unreachable!(),
    }
}
