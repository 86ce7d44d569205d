"""
Contract API layer.

Translates between the raw string arguments a client submits and the typed
argument records of the profiles, dispatches to the business logic, and turns
application-level aborts into rollback responses. Every invocation is logged
at its beginning and end for traceability.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Type

from .exceptions import BusinessRollback, RegistryError, UnknownFunctionError
from .inputs import (
    DeliveryArgs,
    LoadArgs,
    NewOrderArgs,
    OrderStatusArgs,
    PaymentArgs,
    ProfileArgs,
    StockLevelArgs,
)
from .ledger_access import LedgerAccess
from .profiles import (
    do_delivery,
    do_load,
    do_new_order,
    do_order_status,
    do_payment,
    do_stock_level,
)
from .registry import TpccRegistries

logger = logging.getLogger(__name__)

Handler = Callable[[TpccRegistries, ProfileArgs], Dict]


@dataclass(frozen=True)
class ProfileRequest:
    """A function invocation as it crosses the API boundary."""

    tx_id: str
    function: str
    args: Tuple[str, ...] = ()

    @classmethod
    def from_args(cls, tx_id: str, record: ProfileArgs) -> "ProfileRequest":
        return cls(tx_id=tx_id, function=record.FUNCTION, args=tuple(record.to_args()))


@dataclass
class ProfileResponse:
    """Outcome of one contract invocation."""

    tx_id: str
    function: str
    payload: Dict = field(default_factory=dict)
    rollback: bool = False
    error: Optional[str] = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "rollback" if self.rollback else "ok"

    def render(self) -> str:
        """Text form returned to the client."""
        body = {"tx_id": self.tx_id, "function": self.function, "status": self.status}
        if self.error is not None:
            body["error"] = self.error
        body["payload"] = self.payload
        return json.dumps(body, separators=(",", ":"), sort_keys=True)


class Contract:
    """Registry of contract functions and their dispatcher."""

    def __init__(self):
        self._functions: Dict[str, Tuple[Type[ProfileArgs], Handler]] = {}
        self.register(NewOrderArgs, do_new_order)
        self.register(PaymentArgs, do_payment)
        self.register(OrderStatusArgs, do_order_status)
        self.register(DeliveryArgs, do_delivery)
        self.register(StockLevelArgs, do_stock_level)
        self.register(LoadArgs, do_load)

    def register(self, args_class: Type[ProfileArgs], handler: Handler) -> None:
        self._functions[args_class.FUNCTION] = (args_class, handler)

    @property
    def functions(self) -> List[str]:
        return sorted(self._functions)

    def invoke(self, request: ProfileRequest, access: LedgerAccess) -> ProfileResponse:
        """
        Unmarshal the arguments and run the function against an endorsement context.

        Business rollbacks and registry errors discard the buffered writes. A
        rollback comes back marked as such, a registry error (a missing entity)
        as an error response; everything else propagates.

        Raises:
            UnknownFunctionError: If no function is registered under the name
            MarshalError: If the arguments cannot be converted
        """
        entry = self._functions.get(request.function)
        if entry is None:
            raise UnknownFunctionError(f"Unknown contract function '{request.function}'")
        args_class, handler = entry
        args = args_class.from_args(request.args)

        logger.debug("BEGIN %s %s", request.tx_id, request.function)
        response = ProfileResponse(tx_id=request.tx_id, function=request.function)
        try:
            response.payload = handler(TpccRegistries(access), args)
        except BusinessRollback as exc:
            access.discard_writes()
            response.rollback = True
            response.payload = {"reason": exc.reason}
        except RegistryError as exc:
            access.discard_writes()
            response.error = str(exc) if exc.key is None else f"{exc} [{exc.key}]"
        logger.debug("END %s %s status=%s", request.tx_id, request.function, response.status)
        return response
