"""Privacy-preserving authentication and universal handover for 5G small
cells: sanitisable signatures, an RSA non-membership accumulator for
revocation, role state machines (UE / gNB / AuC), an adversarial in-memory
network simulator, and a benchmark CLI."""

from .accumulator import (
    AccumulatedElement,
    AccumulatorSecret,
    AccumulatorState,
    NonMembershipWitness,
    catch_up,
    gen_acc,
    kgen_acc,
    kgen_acc_from_primes,
    nonwit_create,
    nonwit_update,
    update_acc,
    verify_nonwit,
)
from .certs import (
    Certificate,
    GnbIdentity,
    UserIdentity,
    decode_cert,
    encode_cert,
    gnb_cert_template,
    user_cert_template,
)
from .deploy import Deployment
from .groupcrypto import (
    KeyPairOut,
    P256Group,
    ToyGroup,
    ae_decrypt,
    ae_encrypt,
    dh_keygen,
    dh_shared,
    group_by_name,
    kdf,
)
from .netsim import (
    Scenario,
    Simulator,
    TraceLog,
    assert_matching_subset,
    parse_scenario,
    run_scenario,
)
from .protocol import AuthCenter, GNodeB, Role, SessionState, Status, UserEquipment
from .rng import DetRng
from .sansig import Adm, SanSignature, SigKeyPair, kgen_san, kgen_sig, sanit, sign, verify
from .wire import MsgTag, WireMessage

__version__ = "0.1.0"

__all__ = [
    "AccumulatedElement",
    "AccumulatorSecret",
    "AccumulatorState",
    "Adm",
    "AuthCenter",
    "Certificate",
    "Deployment",
    "DetRng",
    "GNodeB",
    "GnbIdentity",
    "KeyPairOut",
    "MsgTag",
    "NonMembershipWitness",
    "P256Group",
    "Role",
    "SanSignature",
    "Scenario",
    "SessionState",
    "SigKeyPair",
    "Simulator",
    "Status",
    "ToyGroup",
    "TraceLog",
    "UserEquipment",
    "UserIdentity",
    "WireMessage",
    "ae_decrypt",
    "ae_encrypt",
    "assert_matching_subset",
    "catch_up",
    "decode_cert",
    "dh_keygen",
    "dh_shared",
    "encode_cert",
    "gen_acc",
    "gnb_cert_template",
    "group_by_name",
    "kdf",
    "kgen_acc",
    "kgen_acc_from_primes",
    "kgen_san",
    "kgen_sig",
    "nonwit_create",
    "nonwit_update",
    "parse_scenario",
    "run_scenario",
    "sanit",
    "sign",
    "update_acc",
    "user_cert_template",
    "verify",
    "verify_nonwit",
]
