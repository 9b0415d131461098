pub mod fock;
pub mod odqs;
pub mod qgrp;
pub mod stiefel;
