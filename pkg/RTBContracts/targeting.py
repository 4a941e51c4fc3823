# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Contracts and the decomposition of their (overlapping) targeting sets into
disjoint item types.
"""
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import FrozenSet, Tuple, Union

from RTBContracts.errors import InputError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Contract:
    id: Union[int, str]
    deadline: float
    requirement: float
    targeting: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, 'targeting', frozenset(str(a) for a in self.targeting))
        if not self.deadline > 0:
            raise ParameterError('contract %r: deadline must be > 0' % (self.id,))
        if self.requirement < 0:
            raise ParameterError('contract %r: requirement must be >= 0' % (self.id,))
        if not self.targeting:
            raise ParameterError('contract %r: targeting set is empty' % (self.id,))


@dataclass(frozen=True)
class Decomposition:
    """
    types[j] is the atom set R_j, type_contracts[j] is B_j and
    contract_types[i] is A_i. Indices are 0-based positions in the contract list.
    """
    types: Tuple[FrozenSet[str], ...]
    contract_types: Tuple[Tuple[int, ...], ...]
    type_contracts: Tuple[Tuple[int, ...], ...]
    type_deadlines: Tuple[float, ...]
    deadlines: Tuple[float, ...]

    @property
    def n_types(self):
        return len(self.types)

    @property
    def n_contracts(self):
        return len(self.contract_types)

    def type_of_atom(self, atom):
        for j, atoms in enumerate(self.types):
            if atom in atoms:
                return j
        return None


def decompose(contracts):
    '''
    Minimal partition of the targeted atoms into item types
    :param contracts: list of Contract
    :return: Decomposition; atoms sharing the same set of interested
             contracts form one type, types sorted by (|B_j|, B_j)
    '''
    contracts = list(contracts)
    if not contracts:
        raise ParameterError('cannot decompose an empty contract list')

    signature = {}
    for i, c in enumerate(contracts):
        for atom in c.targeting:
            signature.setdefault(atom, set()).add(i)

    cells = {}
    for atom, members in signature.items():
        cells.setdefault(tuple(sorted(members)), set()).add(atom)

    keys = sorted(cells, key=lambda sig: (len(sig), sig))
    types = tuple(frozenset(cells[k]) for k in keys)
    type_contracts = tuple(keys)
    contract_types = tuple(
        tuple(j for j, members in enumerate(type_contracts) if i in members) for i in range(len(contracts))
    )
    deadlines = tuple(float(c.deadline) for c in contracts)
    type_deadlines = tuple(max(deadlines[i] for i in members) for members in type_contracts)

    logger.debug('decomposed %d contracts into %d item types', len(contracts), len(types))
    return Decomposition(types, contract_types, type_contracts, type_deadlines, deadlines)


def active_contracts(d: Decomposition, contracts, t):
    return {i for i, c in enumerate(contracts) if t < c.deadline}


def active_types(d: Decomposition, contracts, t):
    return {j for j, deadline in enumerate(d.type_deadlines) if t < deadline}


def shift_contracts(contracts, offset):
    """Deadlines measured from a clock that started ``offset`` hours earlier."""
    return [replace(c, deadline=c.deadline + offset) for c in contracts]


def contracts_from_list(items):
    contracts = []
    for n, item in enumerate(items):
        try:
            contracts.append(Contract(
                id=item.get('id', n + 1),
                deadline=float(item['deadline_hours']),
                requirement=float(item['requirement']),
                targeting=frozenset(str(a) for a in item['targeting']),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError('contract entry %d is malformed: %s' % (n, e))
    if not contracts:
        raise InputError('contract list is empty')
    return contracts


def load_contracts(path):
    try:
        with open(path) as f:
            items = json.load(f)
    except (OSError, ValueError) as e:
        raise InputError('cannot read contract file %s: %s' % (path, e))
    if not isinstance(items, list):
        raise InputError('contract file %s must hold a JSON list' % path)
    return contracts_from_list(items)


def contracts_to_list(contracts):
    return [{'id': c.id, 'deadline_hours': c.deadline, 'requirement': c.requirement,
             'targeting': sorted(c.targeting)} for c in contracts]


def dump_contracts(contracts, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        json.dump(contracts_to_list(contracts), f, indent=2)
