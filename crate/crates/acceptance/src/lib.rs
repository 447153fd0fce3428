//! Empty library; this package only carries the `acceptance` test target.
