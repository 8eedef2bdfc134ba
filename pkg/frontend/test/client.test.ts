import { describe, expect, it } from 'vitest'

import { SessionClient, SocketLike } from '../src/client.js'
import { ClientInput } from '../src/protocol.js'
import { idleInput } from '../src/input.js'

const fakeSocket = () => {
    const sent: any[] = []
    const socket: SocketLike = {
        readyState: 1,
        send: (d: string) => sent.push(JSON.parse(d)),
        close: () => { socket.readyState = 3 },
    }
    return { socket, sent }
}

const origin = { x: 0, y: 0 }

describe('SessionClient', () => {
    it('says hello on attach', () => {
        const { socket, sent } = fakeSocket()
        new SessionClient().attach(socket)
        expect(sent[0]).toEqual({ type: 'hello' })
    })

    it('seq strictly increases across sends', () => {
        const { socket, sent } = fakeSocket()
        const client = new SessionClient()
        client.attach(socket)
        const input = idleInput()
        client.heartbeat(input, origin)
        input.triggerHeld = true
        client.pushInput(input, origin)
        client.heartbeat(input, origin)
        const seqs = sent.filter((m) => m.type === 'input').map((m: ClientInput) => m.seq)
        expect(seqs).toEqual([1, 2, 3])
    })

    it('unchanged input is not re-sent outside heartbeats', () => {
        const { socket, sent } = fakeSocket()
        const client = new SessionClient()
        client.attach(socket)
        const input = idleInput()
        client.pushInput(input, origin)
        client.pushInput(input, origin)
        client.pushInput(input, origin)
        expect(sent.filter((m) => m.type === 'input').length).toBe(1)
    })

    it('buffers at most one input while disconnected, flushes on attach', () => {
        const client = new SessionClient()
        const input = idleInput()
        client.pushInput(input, origin) // dropped into the buffer
        input.triggerHeld = true
        client.pushInput(input, origin) // replaces it (latest wins)
        const { socket, sent } = fakeSocket()
        client.attach(socket)
        const inputs = sent.filter((m) => m.type === 'input')
        expect(inputs.length).toBe(1)
        expect(inputs[0].trigger).toBe(true)
        expect(inputs[0].seq).toBe(1)
    })
})
