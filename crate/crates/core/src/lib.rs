//! Engine for spotting novice misconceptions in NovLang programs, asking
//! verifiable questions about them, explaining actual behavior and inserting
//! reminders into the code.

pub mod analysis;
pub mod explain;
pub mod inquiry;
pub mod interp;
pub mod lang;
pub mod remedy;
pub mod session;
#[doc(hidden)]
pub mod testgen;
pub mod smells;

#[cfg(test)]
pub(crate) mod fixtures {
    /// The yes/no prompt loop whose `or` condition can never be false.
    pub const ORIGINAL_LOOP: &str = "response = input(\"Please enter (y)es or (n)o\")\n\
while response != 'y' or response != 'n':\n    response = input(\"Please enter (y)es or (n)o\")\n";
}
