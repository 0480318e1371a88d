"""Deterministic desk-scale simulator of clustered federated learning.

Clients are scored (dataset schema fingerprint, device performance indices),
clustered by the global server over data similarity, performance, and
geographic proximity, and then train through rounds of local SGD, peer weight
exchange, and driver-led consensus aggregation with checkpoint-gated uploads.
Every simulated transmission is logged, so the communication overhead of the
clustered protocol can be compared against a traditional federated-learning
baseline under identical data partitions and seeds.
"""

__version__ = "0.1.0"
