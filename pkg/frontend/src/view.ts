import { EventMessage, StateMessage, Vec2 } from './protocol.js'
import { idleInput, InputState } from './input.js'

export type ConnectionStatus = 'connecting' | 'connected' | 'closed'

const TRAIL_LIMIT = 240 // ~12 s of 20 Hz states

export interface ViewModel {
    latest: StateMessage | null
    lastTick: number // never render backwards in time
    camera: { center: Vec2; metersPerPixel: number }
    input: InputState
    status: ConnectionStatus
    participantTrail: Vec2[] // oldest first
    projectileTrails: Map<number, Vec2[]>
    recentEvents: EventMessage[]
}

export const createViewModel = (): ViewModel => ({
    latest: null,
    lastTick: -1,
    camera: { center: { x: 0, y: 0 }, metersPerPixel: 0.02 },
    input: idleInput(),
    status: 'connecting',
    participantTrail: [],
    projectileTrails: new Map(),
    recentEvents: [],
})

// The server is authoritative: the only mutation of world data is here.
// Stale states (tick older than one already applied) are dropped so the
// scene never steps backwards.
export const applyState = (view: ViewModel, state: StateMessage): boolean => {
    if (state.tick < view.lastTick) return false
    view.latest = state
    view.lastTick = state.tick
    view.participantTrail.push({ x: state.participant.x, y: state.participant.y })
    if (view.participantTrail.length > TRAIL_LIMIT) view.participantTrail.shift()

    const live = new Set(state.projectiles.map((p) => p.id))
    for (const p of state.projectiles) {
        let trail = view.projectileTrails.get(p.id)
        if (!trail) {
            trail = []
            view.projectileTrails.set(p.id, trail)
        }
        trail.push({ x: p.x, y: p.y })
        if (trail.length > TRAIL_LIMIT) trail.shift()
    }
    for (const id of view.projectileTrails.keys()) {
        if (!live.has(id)) view.projectileTrails.delete(id)
    }
    for (const e of state.events) applyEvent(view, e)
    return true
}

export const applyEvent = (view: ViewModel, event: EventMessage): void => {
    view.recentEvents.push(event)
    if (view.recentEvents.length > 20) view.recentEvents.shift()
}
