"""System-wide and per-process replication/migration policy.

The system policy has four states: fully disabled, honor per-process masks,
force page-table allocation onto one socket, or replicate every address space
on all sockets. Address spaces route their mask changes through the policy
engine, which also owns the context-switch hook that selects the socket-local
root, and the process-migration hook that moves page-tables when enabled.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pagetable import AddressSpace


@dataclass(frozen=True)
class SystemPolicy:
    """One of: disabled, per-process, fixed:<socket>, all."""

    state: str
    fixed_socket: int | None = None

    _STATES = ("disabled", "per-process", "fixed", "all")

    def __post_init__(self) -> None:
        if self.state not in self._STATES:
            raise ValueError(f"unknown policy state {self.state!r}")
        if self.state == "fixed" and self.fixed_socket is None:
            raise ValueError("fixed policy needs a socket")

    @classmethod
    def parse(cls, text: str) -> "SystemPolicy":
        """Parse CLI spellings: off|per-process|fixed:<s>|all."""
        if text in ("off", "disabled"):
            return cls("disabled")
        if text == "per-process":
            return cls("per-process")
        if text == "all":
            return cls("all")
        if text.startswith("fixed:"):
            return cls("fixed", int(text.split(":", 1)[1]))
        raise ValueError(f"unknown system policy {text!r}")


class PolicyEngine:
    """Holds the active system policy and applies it to address spaces."""

    def __init__(self, policy: SystemPolicy | None = None,
                 migrate_eager_free: bool = True) -> None:
        self.policy = policy or SystemPolicy("per-process")
        self.migrate_eager_free = migrate_eager_free

    def set_system_policy(self, policy: SystemPolicy | str) -> None:
        if isinstance(policy, str):
            policy = SystemPolicy.parse(policy)
        self.policy = policy

    def effective_mask(self, requested, primary: int, socket_count: int) -> frozenset:
        """Resolve a requested replication mask under the system policy.

        Disabled collapses everything to the primary socket (pre-existing
        replicas fold up at the next mask operation); fixed overrides any
        per-process request; all replicates everywhere.
        """
        state = self.policy.state
        if state == "disabled":
            return frozenset({primary})
        if state == "fixed":
            return frozenset({self.policy.fixed_socket})
        if state == "all":
            return frozenset(range(socket_count))
        return frozenset(requested)

    def pt_socket_override(self) -> int | None:
        """Socket every page-table page must land on, or None."""
        if self.policy.state == "fixed":
            return self.policy.fixed_socket
        return None

    def on_context_switch(self, space: AddressSpace, core_socket: int,
                          engine=None) -> int:
        """Select the root for the socket a process was just scheduled on.

        Pure with respect to the table (an array index, no walk, no writes);
        the switching core's TLB is flushed as on any address-space switch.
        """
        if engine is not None:
            engine.set_socket(core_socket)
        return space.root_for_socket(core_socket)

    def on_process_migration(self, space: AddressSpace, from_socket: int,
                             to_socket: int, mitosis_enabled: bool) -> None:
        """Migration hook: page-tables follow the process only when enabled."""
        if not mitosis_enabled or from_socket == to_socket:
            return
        if from_socket not in space.replication_mask:
            # table never lived on the source socket; nothing to move
            return
        space.migrate_pagetable(from_socket, to_socket,
                                eager_free=self.migrate_eager_free)
